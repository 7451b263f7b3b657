#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "test_support.hpp"
#include "viprobe/util.hpp"

using namespace viprobe;

TEST(Sha256, KnownVectors) {
  EXPECT_EQ(util::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(util::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Base64, KnownVectorsAndRoundTrip) {
  auto enc = [](std::string_view s) {
    return util::base64_encode({reinterpret_cast<const std::uint8_t*>(s.data()), s.size()});
  };
  EXPECT_EQ(enc(""), "");
  EXPECT_EQ(enc("f"), "Zg==");
  EXPECT_EQ(enc("fo"), "Zm8=");
  EXPECT_EQ(enc("foobar"), "Zm9vYmFy");

  std::mt19937 rng(3);
  for (int n = 0; n < 64; ++n) {
    std::vector<std::uint8_t> bytes(static_cast<std::size_t>(n));
    for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(util::base64_decode(util::base64_encode(bytes)), bytes) << n;
  }
}

TEST(FormatNumber, TrimsAndNormalizesNegativeZero) {
  EXPECT_EQ(util::format_number(1.5), "1.5");
  EXPECT_EQ(util::format_number(2.0), "2");
  EXPECT_EQ(util::format_number(-0.00001), "0");
  EXPECT_EQ(util::format_number(0.123456789, 6), "0.123457");
  EXPECT_THROW(util::format_number(std::nan("")), ValidationError);
}

TEST(Seeds, DeriveSeedIsStableAndSpreads) {
  EXPECT_EQ(util::derive_seed(1, 2, 3), util::derive_seed(1, 2, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 1000; ++i) seen.insert(util::derive_seed(42, i));
  EXPECT_EQ(seen.size(), 1000u);
  EXPECT_NE(util::derive_seed(1, 2), util::derive_seed(2, 1));
}

TEST(Seeds, UniformIndexStaysInRangeAndCoversIt) {
  std::mt19937_64 rng(9);
  std::vector<int> hist(7, 0);
  for (int i = 0; i < 7000; ++i) ++hist[util::uniform_index(rng, 7)];
  for (int h : hist) EXPECT_GT(h, 800);
  EXPECT_THROW(util::uniform_index(rng, 0), std::invalid_argument);
}

TEST(Seeds, ShuffleIsSeededPermutation) {
  std::vector<int> base(50);
  std::iota(base.begin(), base.end(), 0);
  auto a = base, b = base;
  std::mt19937_64 r1(5), r2(5);
  util::shuffle(a, r1);
  util::shuffle(b, r2);
  EXPECT_EQ(a, b);
  EXPECT_NE(a, base);
  std::sort(a.begin(), a.end());
  EXPECT_EQ(a, base);
}

TEST(Files, AtomicWriteReplacesContent) {
  fixture::TempDir dir;
  const auto p = dir / "nested/file.txt";
  util::write_file_atomic(p, std::string_view("first"));
  util::write_file_atomic(p, std::string_view("second"));
  EXPECT_EQ(util::read_file(p), "second");
  EXPECT_FALSE(std::filesystem::exists(p.string() + ".tmp"));
  EXPECT_THROW(util::read_file(dir / "missing"), Error);
}

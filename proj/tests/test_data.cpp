// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The ProtoFuse Authors

#include <doctest.h>

#include <cmath>
#include <set>

#include "protofuse/binary_io.hpp"
#include "protofuse/data.hpp"
#include "protofuse/error.hpp"
#include "support.hpp"

using namespace protofuse;

namespace {

SyntheticSpec small_spec() {
  SyntheticSpec s;
  s.num_classes = 25;
  s.samples_per_class = 30;
  s.d_in = 6;
  s.attr_dim = 4;
  s.seed = 77;
  return s;
}

ErrorCategory category_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("expected an error");
  return ErrorCategory::invalid_state;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("generation is deterministic and byte-stable") {
  const auto a = generate_synthetic(small_spec());
  const auto b = generate_synthetic(small_spec());
  CHECK(encode_dataset(a.data) == encode_dataset(b.data));
  CHECK(format_manifest(a.manifest) == format_manifest(b.manifest));
  SyntheticSpec other = small_spec();
  other.seed = 78;
  CHECK(encode_dataset(generate_synthetic(other).data) != encode_dataset(a.data));
}

TEST_CASE("generated classes carry ids, tokens and shapes") {
  const auto ds = generate_synthetic(small_spec());
  REQUIRE(ds.data.classes.size() == 25);
  for (std::size_t c = 0; c < 25; ++c) {
    CHECK(ds.data.classes[c].class_id == c);
    CHECK(ds.data.classes[c].token == kFirstClassToken + c);
    CHECK(ds.data.classes[c].attributes.size() == 4);
    CHECK(ds.data.classes[c].samples.size() == 30 * 6);
  }
}

TEST_CASE("without semantic signal class means ignore the attributes") {
  SyntheticSpec a = small_spec();
  a.semantic_signal = 0.0;
  SyntheticSpec b = a;
  b.attr_dim = 9;  // different attributes and projection, same offsets and noise
  const auto da = generate_synthetic(a);
  const auto db = generate_synthetic(b);
  for (std::size_t c = 0; c < da.data.classes.size(); ++c) {
    CHECK(da.data.classes[c].samples == db.data.classes[c].samples);
  }
}

TEST_CASE("full semantic signal puts class means on the projected attributes") {
  SyntheticSpec s = small_spec();
  s.semantic_signal = 1.0;
  s.sigma = 1e-4;
  const auto ds = generate_synthetic(s);
  Rng proj(mix_seed(s.seed, hash_name("data.projection")));
  std::vector<double> m(s.d_in * s.attr_dim);
  for (double& v : m) v = proj.normal() / std::sqrt(static_cast<double>(s.attr_dim));
  for (const auto& rec : ds.data.classes) {
    for (std::size_t i = 0; i < s.d_in; ++i) {
      double mean = 0.0;
      for (std::size_t r = 0; r < s.samples_per_class; ++r) mean += rec.samples[r * s.d_in + i];
      mean /= s.samples_per_class;
      double expected = 0.0;
      for (std::size_t j = 0; j < s.attr_dim; ++j) expected += m[i * s.attr_dim + j] * rec.attributes[j];
      CHECK(mean == doctest::Approx(expected).epsilon(1e-3).scale(1.0));
    }
  }
}

TEST_CASE("split is 64/16/20, disjoint, sorted and complete") {
  const auto ds = generate_synthetic(SyntheticSpec{});
  CHECK(ds.manifest.base.size() == 64);
  CHECK(ds.manifest.val.size() == 16);
  CHECK(ds.manifest.novel.size() == 20);
  std::set<std::uint32_t> all;
  for (Split s : {Split::base, Split::val, Split::novel}) {
    const auto& ids = ds.manifest.ids(s);
    CHECK(std::is_sorted(ids.begin(), ids.end()));
    all.insert(ids.begin(), ids.end());
  }
  CHECK(all.size() == 100);
}

TEST_CASE("spec validation") {
  SyntheticSpec s = small_spec();
  s.semantic_signal = 1.5;
  CHECK_THROWS_AS(generate_synthetic(s), Error);
  s = small_spec();
  s.sigma = 0.0;
  CHECK_THROWS_AS(generate_synthetic(s), Error);
  s = small_spec();
  s.num_classes = 0;
  CHECK_THROWS_AS(generate_synthetic(s), Error);
}

TEST_CASE("dataset files round-trip bit for bit") {
  const auto dir = test::scratch_dir("fsld");
  const auto ds = generate_synthetic(small_spec());
  write_dataset(dir / "a.fsld", ds.data);
  const DatasetFile back = read_dataset(dir / "a.fsld");
  CHECK(encode_dataset(back) == encode_dataset(ds.data));
  for (std::size_t c = 0; c < back.classes.size(); ++c) {
    CHECK(back.classes[c].samples == ds.data.classes[c].samples);
    CHECK(back.classes[c].attributes == ds.data.classes[c].attributes);
  }
  write_dataset(dir / "b.fsld", back);
  CHECK(read_file_bytes(dir / "a.fsld") == read_file_bytes(dir / "b.fsld"));
}

TEST_CASE("dataset header is little-endian") {
  DatasetFile d;
  d.d_in = 1;
  d.attr_dim = 1;
  d.samples_per_class = 1;
  d.classes.push_back({0x01020304u, 5, {1.0f}, {-2.0f}});
  const auto bytes = encode_dataset(d);
  // magic(4) version(2) classes(4) d_in(4) attr(4) spc(4) then class id
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "FSLD");
  CHECK(bytes[4] == 1);
  CHECK(bytes[5] == 0);
  CHECK(bytes[6] == 1);
  CHECK(bytes[22] == 0x04);
  CHECK(bytes[25] == 0x01);
  // -2.0f = 0xC0000000
  const std::size_t sample_at = 22 + 4 + 4 + 4;
  CHECK(bytes[sample_at + 3] == 0xC0);
  CHECK(bytes.size() == sample_at + 4 + 4);
}

TEST_CASE("dataset corruption is detected") {
  const auto ds = generate_synthetic(small_spec());
  const auto bytes = encode_dataset(ds.data);

  auto magic = bytes;
  magic[0] = 'X';
  CHECK(category_of([&] { decode_dataset(magic); }) == ErrorCategory::format);

  for (std::size_t at : {std::size_t{30}, bytes.size() / 2, bytes.size() - 5}) {
    auto flipped = bytes;
    flipped[at] ^= 0x10;
    CHECK(category_of([&] { decode_dataset(flipped); }) == ErrorCategory::format);
  }

  auto crc = bytes;
  crc.back() ^= 0xff;
  CHECK(category_of([&] { decode_dataset(crc); }) == ErrorCategory::format);

  const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + 12);
  CHECK(category_of([&] { decode_dataset(truncated); }) == ErrorCategory::format);
}

TEST_CASE("manifest text round-trips and rejects malformed input") {
  const auto ds = generate_synthetic(small_spec());
  const std::string text = format_manifest(ds.manifest);
  const SplitManifest back = parse_manifest(text);
  CHECK(back.base == ds.manifest.base);
  CHECK(back.val == ds.manifest.val);
  CHECK(back.novel == ds.manifest.novel);
  CHECK_THROWS_AS(parse_manifest("base: 1,2\nval: 3\n"), Error);
  CHECK_THROWS_AS(parse_manifest("base: 1,2\nval: 2\nnovel: 4\n"), Error);
  CHECK_THROWS_AS(parse_manifest("base: 1,x\nval: 3\nnovel: 4\n"), Error);
  CHECK_THROWS_AS(parse_manifest("base: 1\nbase: 2\nval: 3\nnovel: 4\n"), Error);
}

TEST_CASE("sampler counts and determinism") {
  const auto ds = generate_synthetic(small_spec());
  const EpisodeSampler sampler(ds.data, ds.manifest);
  const Episode ep = sampler.sample(Split::base, 5, 1, 15, 123);
  CHECK(ep.support.size() == 5);
  CHECK(ep.query.size() == 75);
  CHECK_NOTHROW(ep.validate());
  const Episode again = sampler.sample(Split::base, 5, 1, 15, 123);
  for (std::size_t i = 0; i < ep.query.size(); ++i) {
    CHECK(ep.query[i].sample_id == again.query[i].sample_id);
    CHECK(ep.query[i].features == again.query[i].features);
  }
  CHECK(sampler.labeled_support_draws() == 2);
  const Episode zs = sampler.sample(Split::novel, 5, 0, 3, 1);
  CHECK(zs.support.empty());
  CHECK(sampler.labeled_support_draws() == 2);
}

TEST_CASE("sampler keeps splits and support/query disjoint over many episodes") {
  const auto ds = generate_synthetic(small_spec());
  const EpisodeSampler sampler(ds.data, ds.manifest);
  for (Split split : {Split::base, Split::val, Split::novel}) {
    const auto& ids = ds.manifest.ids(split);
    const std::set<std::uint32_t> allowed(ids.begin(), ids.end());
    for (std::uint64_t t = 0; t < 1000; ++t) {
      const Episode ep = sampler.sample(split, 3, 2, 4, episode_seed(9, t));
      std::set<std::size_t> seen;
      for (const auto& c : ep.classes) REQUIRE(allowed.count(c.class_id));
      for (const auto& s : ep.support) REQUIRE(seen.insert(s.sample_id).second);
      for (const auto& q : ep.query) REQUIRE(seen.insert(q.sample_id).second);
      REQUIRE_NOTHROW(ep.validate());
    }
  }
}

TEST_CASE("sampler errors") {
  const auto ds = generate_synthetic(small_spec());
  const EpisodeSampler sampler(ds.data, ds.manifest);
  CHECK(category_of([&] { sampler.sample(Split::val, 50, 1, 1, 0); }) == ErrorCategory::capacity);
  CHECK(category_of([&] { sampler.sample(Split::base, 2, 20, 20, 0); }) == ErrorCategory::capacity);
  CHECK(category_of([&] { sampler.sample(Split::base, 0, 1, 1, 0); }) == ErrorCategory::invalid_argument);
  CHECK(category_of([&] { sampler.sample(Split::base, 2, 1, 0, 0); }) == ErrorCategory::invalid_argument);
}

TEST_CASE("crc32 matches the standard check value") {
  const std::string s = "123456789";
  const std::vector<std::uint8_t> bytes(s.begin(), s.end());
  CHECK(crc32_of(bytes) == 0xCBF43926u);
}

}  // TEST_SUITE

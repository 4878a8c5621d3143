#pragma once

#include <cstdint>
#include <string>

namespace affgan::data {

/// Synthetic corpus generator. The licensed affective datasets cannot be
/// redistributed, so tests and demos run on generated color-field images:
/// hue tracks synthetic valence, contrast tracks synthetic arousal.
struct FixtureOptions {
  int image_size = 64;
  /// Circumplex: (valence, arousal) uniform over the square, textured
  /// gradients. Separable13: one tight color cluster per category, with
  /// (valence, arousal) pinned to the category's region center.
  enum class Style { Circumplex, Separable13 };
  Style style = Style::Circumplex;
};

/// Writes n images under out_dir/images plus out_dir/manifest.csv and
/// returns the manifest path. Deterministic for a given seed.
std::string synth_fixture(int n, uint64_t seed, const std::string& out_dir,
                          const FixtureOptions& opts = {});

}  // namespace affgan::data

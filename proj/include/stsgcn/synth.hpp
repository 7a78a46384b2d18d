#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include "stsgcn/error.hpp"
#include "stsgcn/pose_sequence.hpp"
#include "stsgcn/random.hpp"

namespace stsgcn {

/// Synthetic periodic motion of a kinematic chain.
struct SynthSpec {
  std::size_t joints = 12;
  std::size_t frames = 300;
  std::size_t fps = 25;
  double period = 40.0;      // frames per cycle of the fundamental
  std::size_t harmonics = 3; // sinusoids per coordinate, 1..3
  double amplitude = 40.0;   // peak amplitude of the fundamental
  double bone_length = 100.0;
  double noise = 0.0;        // stddev of additive Gaussian noise
  std::uint64_t skeleton_seed = 0;  // rest pose; shared by every generated sequence
  std::size_t observed = 10;
  std::size_t horizon = 25;

  void validate() const {
    if (joints < 2) throw ConfigError("synth.joints must be at least 2");
    if (frames < observed + horizon) {
      throw ConfigError("synth.frames must be at least observed + horizon = " + std::to_string(observed + horizon));
    }
    if (fps == 0) throw ConfigError("synth.fps must be positive");
    if (!(period > 0.0)) throw ConfigError("synth.period must be positive");
    if (harmonics < 1 || harmonics > 3) throw ConfigError("synth.harmonics must be in 1..3");
    if (!(amplitude >= 0.0) || !(bone_length >= 0.0) || !(noise >= 0.0)) {
      throw ConfigError("synth amplitude, bone_length and noise must be non-negative");
    }
  }
};

/// Rest pose of the chain: joint 0 at the origin, every other joint one bone
/// away from its predecessor in a seeded random direction.
inline std::vector<double> synth_rest_pose(const SynthSpec& spec) {
  Rng rng(spec.skeleton_seed);
  std::vector<double> rest(spec.joints * 3, 0.0);
  for (std::size_t v = 1; v < spec.joints; ++v) {
    const double z = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double r = std::sqrt(1.0 - z * z);
    const double dir[3] = {r * std::cos(phi), r * std::sin(phi), z};
    for (std::size_t d = 0; d < 3; ++d) rest[v * 3 + d] = rest[(v - 1) * 3 + d] + spec.bone_length * dir[d];
  }
  return rest;
}

/// Every coordinate oscillates around the rest pose as a sum of harmonics of
/// the base period; amplitudes and phases come from `seed`.
inline PoseSequence synth_generate(const SynthSpec& spec, std::uint64_t seed) {
  spec.validate();
  const std::vector<double> rest = synth_rest_pose(spec);
  const std::size_t V = spec.joints, H = spec.harmonics;
  Rng rng(seed);
  std::vector<double> amp(V * 3 * H), phase(V * 3 * H);
  for (std::size_t i = 0; i < V * 3 * H; ++i) {
    const double h = static_cast<double>(i % H + 1);
    amp[i] = spec.amplitude * rng.uniform(0.25, 1.0) / h;
    phase[i] = rng.uniform(0.0, 2.0 * std::numbers::pi);
  }
  const double omega = 2.0 * std::numbers::pi / spec.period;
  std::vector<double> values(spec.frames * V * 3);
  for (std::size_t f = 0; f < spec.frames; ++f) {
    for (std::size_t c = 0; c < V * 3; ++c) {
      double x = rest[c];
      for (std::size_t h = 0; h < H; ++h) {
        const std::size_t i = c * H + h;
        x += amp[i] * std::sin(omega * static_cast<double>((h + 1) * f) + phase[i]);
      }
      values[f * V * 3 + c] = x;
    }
  }
  if (spec.noise > 0.0) {
    for (double& x : values) x += rng.normal(0.0, spec.noise);
  }
  return PoseSequence(V, Representation::Coords3d, spec.fps, std::move(values));
}

}  // namespace stsgcn

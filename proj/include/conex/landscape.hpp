#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conex/executor.hpp"
#include "conex/space.hpp"
#include "conex/validity.hpp"

namespace conex {

/// Parsed from `name[:key=value,...]`, e.g.
/// `two_basin_deceptive:seed=3,scale=10`.
///
/// Keys: seed (landscape constants), scale (cost multiplier), offset (cost
/// at the all-default configuration before scaling), noise (relative sigma
/// of multiplicative measurement noise), noise_seed, radius (narrow-basin
/// radius of two_basin_deceptive), ignore (`|`-separated parameter names
/// that do not affect cost).
struct LandscapeDescriptor {
  std::string name;
  std::uint64_t seed = 1;
  double scale = 1.0;
  double offset = 100.0;
  double noise = 0.0;
  std::uint64_t noise_seed = 0;
  double radius = 0.35;
  std::vector<std::string> ignore;

  std::string canonical() const;
};

LandscapeDescriptor parse_landscape_descriptor(std::string_view text);

/// Deterministic synthetic benchmark over a discretized space.
///
/// Every relevant parameter j is mapped to a coordinate
///   x_j = (index_j - default_index_j) / (candidates_j - 1)
/// so the all-default configuration sits at the origin. Subclasses define
/// cost(x); measure() multiplies by `scale` and, when noise > 0, by
/// (1 + noise * N(0,1)) drawn from a stream keyed by (noise_seed, config,
/// repeat).
class Landscape : public Benchmark {
 public:
  Landscape(const ConfigurationSpace& space, LandscapeDescriptor descriptor);

  Measurement measure(const Configuration& config, int repeat) override;
  std::string descriptor() const override { return "synthetic:" + descriptor_.canonical(); }
  bool deterministic() const override { return true; }

  /// Noise-free cost, including scale.
  double true_cost(const Configuration& config) const;

  std::vector<double> coordinates(const Configuration& config) const;
  const ConfigurationSpace& space() const { return space_; }
  const LandscapeDescriptor& settings() const { return descriptor_; }
  bool ignored(std::size_t j) const { return ignored_[j]; }

 protected:
  virtual double cost(std::span<const double> x) const = 0;

  /// Coordinate of candidate `index` of relevant parameter j.
  double coordinate(std::size_t j, std::size_t index) const;

  ConfigurationSpace space_;
  LandscapeDescriptor descriptor_;
  std::vector<bool> ignored_;
};

/// cost = offset + sum_j w_j * ((x_j - t_j)^2 - t_j^2)
/// Optimum at x = t with cost offset - sum_j w_j t_j^2 (= 0.2 * offset).
class SeparableQuadratic : public Landscape {
 public:
  SeparableQuadratic(const ConfigurationSpace& space, LandscapeDescriptor descriptor);
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& targets() const { return targets_; }

 protected:
  double cost(std::span<const double> x) const override;

 private:
  std::vector<double> weights_;
  std::vector<double> targets_;
};

/// Separable quadratic terms plus disjoint pairwise products:
/// cost = offset + sum_j w_j ((x_j - t_j)^2 - t_j^2) + sum_(a,b) c_ab x_a x_b
/// Roughly two thirds of the parameters are paired; the rest contribute
/// only their solo term.
class PairwiseInteraction : public Landscape {
 public:
  struct Pair {
    std::size_t a;
    std::size_t b;
    double coefficient;
  };

  PairwiseInteraction(const ConfigurationSpace& space, LandscapeDescriptor descriptor);
  const std::vector<double>& weights() const { return weights_; }
  const std::vector<double>& targets() const { return targets_; }
  const std::vector<Pair>& pairs() const { return pairs_; }
  bool interacting(std::size_t j) const;

 protected:
  double cost(std::span<const double> x) const override;

 private:
  std::vector<double> weights_;
  std::vector<double> targets_;
  std::vector<Pair> pairs_;
};

/// A broad basin (depth 0.6 * offset) sloping over the whole space toward
/// point A, and a narrow basin (depth 0.85 * offset, radius `radius` in
/// normalized L1 distance) around B, the mirror image of A. The global
/// optimum B costs 0.15 * offset; the deceptive optimum A costs 0.4 * offset.
class TwoBasinDeceptive : public Landscape {
 public:
  TwoBasinDeceptive(const ConfigurationSpace& space, LandscapeDescriptor descriptor);
  const std::vector<std::size_t>& broad_center() const { return center_a_; }
  const std::vector<std::size_t>& narrow_center() const { return center_b_; }
  /// Normalized L1 distance in candidate-index space, in [0, 1].
  double distance(const Configuration& config, const std::vector<std::size_t>& center) const;

 protected:
  double cost(std::span<const double> x) const override;

 private:
  double distance_from_coordinates(std::span<const double> x,
                                   const std::vector<std::size_t>& center) const;

  std::vector<std::size_t> center_a_;
  std::vector<std::size_t> center_b_;
  double span_ab_ = 1.0;
};

/// Stepwise landscape: cost = offset * (1 - 0.8 * matched_weight / total_weight)
/// where a parameter is matched when it sits exactly on its target value.
/// Default noise is 1% multiplicative.
class PlateauNoise : public Landscape {
 public:
  PlateauNoise(const ConfigurationSpace& space, LandscapeDescriptor descriptor);
  const std::vector<double>& targets() const { return targets_; }

 protected:
  double cost(std::span<const double> x) const override;

 private:
  std::vector<double> weights_;
  std::vector<double> targets_;
};

/// Throws SchemaError on an unknown landscape name.
std::shared_ptr<Landscape> make_landscape(const LandscapeDescriptor& descriptor,
                                          const ConfigurationSpace& space);
std::shared_ptr<Landscape> make_landscape(std::string_view descriptor,
                                          const ConfigurationSpace& space);

struct Optimum {
  Configuration config;
  double cost = 0;
  std::size_t valid_count = 0;
};

/// Brute-force minimum of true_cost over every configuration (valid under
/// `rules` when given). Ties resolve to the first in enumeration order.
Optimum exhaustive_optimum(const Landscape& landscape, const RuleSet* rules = nullptr);

}  // namespace conex

#include "conex/landscape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "conex/digest.hpp"
#include "conex/rng.hpp"

namespace conex {

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto pos = text.find(sep, start);
    if (pos == std::string_view::npos) pos = text.size();
    out.emplace_back(text.substr(start, pos - start));
    start = pos + 1;
  }
  return out;
}

double parse_double(const std::string& key, const std::string& text) {
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0') {
    throw SchemaError("landscape option " + key + ": '" + text + "' is not a number");
  }
  return v;
}

std::uint64_t parse_u64(const std::string& key, const std::string& text) {
  char* end = nullptr;
  unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0') {
    throw SchemaError("landscape option " + key + ": '" + text + "' is not an integer");
  }
  return v;
}

}  // namespace

std::string LandscapeDescriptor::canonical() const {
  std::ostringstream out;
  out << name << ":seed=" << seed << ",scale=" << to_text(Value{scale})
      << ",offset=" << to_text(Value{offset}) << ",noise=" << to_text(Value{noise})
      << ",noise_seed=" << noise_seed << ",radius=" << to_text(Value{radius});
  if (!ignore.empty()) {
    out << ",ignore=";
    for (std::size_t i = 0; i < ignore.size(); ++i) out << (i ? "|" : "") << ignore[i];
  }
  return out.str();
}

LandscapeDescriptor parse_landscape_descriptor(std::string_view text) {
  LandscapeDescriptor d;
  auto colon = text.find(':');
  d.name = std::string(text.substr(0, colon));
  if (d.name == "plateau_noise") d.noise = 0.01;
  if (colon == std::string_view::npos) return d;
  for (const auto& item : split(text.substr(colon + 1), ',')) {
    if (item.empty()) continue;
    auto eq = item.find('=');
    if (eq == std::string::npos) throw SchemaError("landscape option without '=': " + item);
    std::string key = item.substr(0, eq);
    std::string val = item.substr(eq + 1);
    if (key == "seed") d.seed = parse_u64(key, val);
    else if (key == "scale") d.scale = parse_double(key, val);
    else if (key == "offset") d.offset = parse_double(key, val);
    else if (key == "noise") d.noise = parse_double(key, val);
    else if (key == "noise_seed") d.noise_seed = parse_u64(key, val);
    else if (key == "radius") d.radius = parse_double(key, val);
    else if (key == "ignore") d.ignore = split(val, '|');
    else throw SchemaError("unknown landscape option '" + key + "'");
  }
  if (!(d.scale > 0) || !(d.offset > 0)) throw SchemaError("landscape scale and offset must be > 0");
  if (d.noise < 0) throw SchemaError("landscape noise must be >= 0");
  return d;
}

// --- base ---------------------------------------------------------------

Landscape::Landscape(const ConfigurationSpace& space, LandscapeDescriptor descriptor)
    : space_(space), descriptor_(std::move(descriptor)) {
  for (const auto& p : space_.relevant()) {
    bool ign = std::find(descriptor_.ignore.begin(), descriptor_.ignore.end(), p.name) !=
               descriptor_.ignore.end();
    ignored_.push_back(ign);
  }
  for (const auto& name : descriptor_.ignore) {
    if (space_.find(name) == nullptr) {
      throw SchemaError("landscape ignores unknown parameter '" + name + "'");
    }
  }
}

double Landscape::coordinate(std::size_t j, std::size_t index) const {
  const auto& p = space_.relevant()[j];
  if (p.candidates.size() < 2) return 0.0;
  return (static_cast<double>(index) - static_cast<double>(p.default_index())) /
         static_cast<double>(p.candidates.size() - 1);
}

std::vector<double> Landscape::coordinates(const Configuration& config) const {
  auto idx = candidate_indices(space_, config);
  std::vector<double> x(idx.size());
  for (std::size_t j = 0; j < idx.size(); ++j) x[j] = coordinate(j, idx[j]);
  return x;
}

double Landscape::true_cost(const Configuration& config) const {
  return descriptor_.scale * cost(coordinates(config));
}

Measurement Landscape::measure(const Configuration& config, int repeat) {
  Measurement m;
  m.ok = true;
  m.value = true_cost(config);
  if (descriptor_.noise > 0) {
    Rng rng = Rng::stream(descriptor_.noise_seed, fnv1a64(config.key()),
                          static_cast<std::uint64_t>(repeat));
    // Box-Muller.
    double u1 = 1.0 - rng.uniform01();
    double u2 = rng.uniform01();
    double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    z = std::clamp(z, -3.0, 3.0);
    m.value *= 1.0 + descriptor_.noise * z;
  }
  return m;
}

namespace {

constexpr std::uint64_t kConstantsTag = 0x6c616e64;  // "land"

Rng constants_rng(const LandscapeDescriptor& d) {
  return Rng::stream(d.seed, kConstantsTag, fnv1a64(d.name));
}

/// Target coordinate: a uniformly chosen non-default candidate.
double draw_target(Rng& rng, const ParameterSpec& p) {
  const std::size_t m = p.candidates.size();
  if (m < 2) return 0.0;
  const std::size_t d = p.default_index();
  std::size_t i = rng.index(m - 1);
  if (i >= d) ++i;
  return (static_cast<double>(i) - static_cast<double>(d)) / static_cast<double>(m - 1);
}

}  // namespace

// --- separable quadratic ------------------------------------------------

SeparableQuadratic::SeparableQuadratic(const ConfigurationSpace& space,
                                       LandscapeDescriptor descriptor)
    : Landscape(space, std::move(descriptor)) {
  Rng rng = constants_rng(descriptor_);
  const auto& dims = space_.relevant();
  double reach = 0;
  for (std::size_t j = 0; j < dims.size(); ++j) {
    double t = draw_target(rng, dims[j]);
    double w = ignored_[j] ? 0.0 : 1.0 + rng.uniform01();
    targets_.push_back(t);
    weights_.push_back(w);
    reach += w * t * t;
  }
  // Normalize so the optimum sits at 20% of the default cost.
  if (reach > 0) {
    for (double& w : weights_) w *= 0.8 * descriptor_.offset / reach;
  }
}

double SeparableQuadratic::cost(std::span<const double> x) const {
  double c = descriptor_.offset;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double dx = x[j] - targets_[j];
    c += weights_[j] * (dx * dx - targets_[j] * targets_[j]);
  }
  return c;
}

// --- pairwise interaction -----------------------------------------------

PairwiseInteraction::PairwiseInteraction(const ConfigurationSpace& space,
                                         LandscapeDescriptor descriptor)
    : Landscape(space, std::move(descriptor)) {
  Rng rng = constants_rng(descriptor_);
  const auto& dims = space_.relevant();
  const std::size_t n = dims.size();
  for (std::size_t j = 0; j < n; ++j) {
    targets_.push_back(draw_target(rng, dims[j]));
    weights_.push_back(ignored_[j] ? 0.0 : 1.0 + rng.uniform01());
  }

  std::vector<std::size_t> eligible;
  for (std::size_t j = 0; j < n; ++j) {
    if (!ignored_[j]) eligible.push_back(j);
  }
  std::vector<std::size_t> order = rng.subset(eligible.size(), eligible.size());
  // Shuffle so pairs are not simply neighbours in file order.
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.index(i)]);
  std::size_t paired = (2 * eligible.size() / 3) & ~std::size_t{1};
  for (std::size_t k = 0; k + 1 < paired; k += 2) {
    double magnitude = 2.0 + 2.0 * rng.uniform01();
    double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
    pairs_.push_back({eligible[order[k]], eligible[order[k + 1]], sign * magnitude});
  }

  // Scale so the cost stays positive: bound the most negative value each
  // term can reach over the candidate grid.
  double lowest = 0;
  for (std::size_t j = 0; j < n; ++j) {
    double best = 0;
    for (std::size_t i = 0; i < dims[j].candidates.size(); ++i) {
      double dx = coordinate(j, i) - targets_[j];
      best = std::min(best, weights_[j] * (dx * dx - targets_[j] * targets_[j]));
    }
    lowest += best;
  }
  for (const auto& pr : pairs_) {
    double best = 0;
    for (std::size_t i = 0; i < dims[pr.a].candidates.size(); ++i) {
      for (std::size_t k = 0; k < dims[pr.b].candidates.size(); ++k) {
        best = std::min(best, pr.coefficient * coordinate(pr.a, i) * coordinate(pr.b, k));
      }
    }
    lowest += best;
  }
  if (lowest < 0) {
    double alpha = 0.85 * descriptor_.offset / -lowest;
    for (double& w : weights_) w *= alpha;
    for (auto& pr : pairs_) pr.coefficient *= alpha;
  }
}

bool PairwiseInteraction::interacting(std::size_t j) const {
  return std::any_of(pairs_.begin(), pairs_.end(),
                     [j](const Pair& p) { return p.a == j || p.b == j; });
}

double PairwiseInteraction::cost(std::span<const double> x) const {
  double c = descriptor_.offset;
  for (std::size_t j = 0; j < x.size(); ++j) {
    double dx = x[j] - targets_[j];
    c += weights_[j] * (dx * dx - targets_[j] * targets_[j]);
  }
  for (const auto& pr : pairs_) c += pr.coefficient * x[pr.a] * x[pr.b];
  return c;
}

// --- two basin ----------------------------------------------------------

TwoBasinDeceptive::TwoBasinDeceptive(const ConfigurationSpace& space,
                                     LandscapeDescriptor descriptor)
    : Landscape(space, std::move(descriptor)) {
  if (!(descriptor_.radius > 0)) throw SchemaError("two_basin_deceptive radius must be > 0");
  Rng rng = constants_rng(descriptor_);
  for (const auto& p : space_.relevant()) {
    std::size_t m = p.candidates.size();
    std::size_t a = rng.index(m);
    // Push A toward an edge so its mirror lands far away.
    if (m > 2 && 2 * a + 1 == m) a = rng.uniform01() < 0.5 ? 0 : m - 1;
    center_a_.push_back(a);
    center_b_.push_back(m - 1 - a);
  }
  span_ab_ = 0;
  for (std::size_t j = 0; j < center_a_.size(); ++j) {
    if (ignored_[j]) continue;
    span_ab_ += std::fabs(coordinate(j, center_a_[j]) - coordinate(j, center_b_[j]));
  }
  span_ab_ /= static_cast<double>(std::max<std::size_t>(1, center_a_.size()));
  if (span_ab_ <= 0) span_ab_ = 1.0;
}

double TwoBasinDeceptive::distance_from_coordinates(std::span<const double> x,
                                                    const std::vector<std::size_t>& center) const {
  double d = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (ignored_[j]) continue;
    d += std::fabs(x[j] - coordinate(j, center[j]));
  }
  return d / static_cast<double>(std::max<std::size_t>(1, x.size()));
}

double TwoBasinDeceptive::distance(const Configuration& config,
                                   const std::vector<std::size_t>& center) const {
  auto x = coordinates(config);
  return distance_from_coordinates(x, center);
}

double TwoBasinDeceptive::cost(std::span<const double> x) const {
  const double offset = descriptor_.offset;
  double broad = 0.60 * offset * std::max(0.0, 1.0 - distance_from_coordinates(x, center_a_) / span_ab_);
  double narrow = 0.85 * offset *
                  std::max(0.0, 1.0 - distance_from_coordinates(x, center_b_) / descriptor_.radius);
  return offset - broad - narrow;
}

// --- plateau ------------------------------------------------------------

PlateauNoise::PlateauNoise(const ConfigurationSpace& space, LandscapeDescriptor descriptor)
    : Landscape(space, std::move(descriptor)) {
  Rng rng = constants_rng(descriptor_);
  for (std::size_t j = 0; j < space_.dimensionality(); ++j) {
    targets_.push_back(draw_target(rng, space_.relevant()[j]));
    weights_.push_back(ignored_[j] ? 0.0 : 1.0 + rng.uniform01());
  }
}

double PlateauNoise::cost(std::span<const double> x) const {
  double total = 0;
  double matched = 0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    total += weights_[j];
    if (std::fabs(x[j] - targets_[j]) < 1e-12) matched += weights_[j];
  }
  if (total <= 0) return descriptor_.offset;
  return descriptor_.offset * (1.0 - 0.8 * matched / total);
}

// --- factory ------------------------------------------------------------

std::shared_ptr<Landscape> make_landscape(const LandscapeDescriptor& descriptor,
                                          const ConfigurationSpace& space) {
  if (descriptor.name == "separable_quadratic") {
    return std::make_shared<SeparableQuadratic>(space, descriptor);
  }
  if (descriptor.name == "pairwise_interaction") {
    return std::make_shared<PairwiseInteraction>(space, descriptor);
  }
  if (descriptor.name == "two_basin_deceptive") {
    return std::make_shared<TwoBasinDeceptive>(space, descriptor);
  }
  if (descriptor.name == "plateau_noise") {
    return std::make_shared<PlateauNoise>(space, descriptor);
  }
  throw SchemaError("unknown synthetic landscape '" + descriptor.name + "'");
}

std::shared_ptr<Landscape> make_landscape(std::string_view descriptor,
                                          const ConfigurationSpace& space) {
  return make_landscape(parse_landscape_descriptor(descriptor), space);
}

Optimum exhaustive_optimum(const Landscape& landscape, const RuleSet* rules) {
  Optimum best;
  best.cost = std::numeric_limits<double>::infinity();
  enumerate_all(landscape.space(), [&](const Configuration& c) {
    if (rules != nullptr && !rules->is_valid(c)) return true;
    ++best.valid_count;
    double v = landscape.true_cost(c);
    if (v < best.cost) {
      best.cost = v;
      best.config = c;
    }
    return true;
  });
  return best;
}

}  // namespace conex

#include "spherefit/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "spherefit/error.hpp"

namespace spherefit {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

constexpr double kQuadratureTolerance = 1e-12;
constexpr double kCapBoundaryTolerance = 1e-12;
constexpr int kMaxRejections = 10'000'000;

template <class F>
double integrate(F f, double lo, double hi) {
  double error = 0.0;
  double l1 = 0.0;
  const double value = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, lo, hi, 20, kQuadratureTolerance, &error, &l1);
  // Error relative to the L1 norm: signed integrands such as z exp(-z^2/2) may cancel to ~0.
  if (!std::isfinite(value) || error > 1e-10 * std::max(l1, 1e-300)) {
    throw Error(ErrorKind::Numeric, "quadrature did not converge on [" + std::to_string(lo) +
                                        ", " + std::to_string(hi) + "]");
  }
  return value;
}

double mode_of_radial_gaussian(double radius, double sigma, Eigen::Index dim) {
  const double k = static_cast<double>(dim - 1);
  return 0.5 * (radius + std::sqrt(radius * radius + 4.0 * sigma * sigma * k));
}

RadialMoments gaussian_moments(double radius, double sigma, Eigen::Index dim) {
  const double k = static_cast<double>(dim - 1);
  const double mode = mode_of_radial_gaussian(radius, sigma, dim);
  // Work in z = (rho - r) / sigma so that the window has unit scale for any sigma.
  // Unnormalized kernel rho^{d-1} exp(-z^2 / 2), rescaled by rho's mode.
  auto rho_of = [=](double z) { return radius + sigma * z; };
  auto kernel = [=](double z) {
    const double rho = radius + sigma * z;
    if (rho <= 0.0) return 0.0;
    return std::exp(k * std::log(rho / mode) - 0.5 * z * z);
  };
  const double lo = std::max(-radius / sigma, -40.0);
  const double hi = 40.0;
  const double mass = integrate(kernel, lo, hi);
  const double mean_z = integrate([&](double z) { return z * kernel(z); }, lo, hi) / mass;
  const double mean_inv_rho = integrate(
                                  [&](double z) {
                                    const double rho = rho_of(z);
                                    return rho > 0.0 ? kernel(z) / rho : 0.0;
                                  },
                                  lo, hi) /
                              mass;
  const double var_z = integrate(
                           [&](double z) {
                             const double c = z - mean_z;
                             return c * c * kernel(z);
                           },
                           lo, hi) /
                       mass;
  const double mean_rho = radius + sigma * mean_z;
  return RadialMoments{mean_rho / radius, radius * mean_inv_rho, sigma * sigma * var_z / (radius * radius)};
}

Vector standard_normal_vector(Eigen::Index dim, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector g(dim);
  for (Eigen::Index i = 0; i < dim; ++i) g(i) = normal(rng);
  return g;
}

// Polar-angle moments E[cos phi], E[cos^2 phi] for U uniform on the cap of
// half-angle max_angle; the polar density is proportional to sin^{d-2}(phi).
std::pair<double, double> cap_cos_moments(double max_angle, Eigen::Index dim) {
  const double k = static_cast<double>(dim - 2);
  auto weight = [k](double phi) { return k == 0.0 ? 1.0 : std::pow(std::sin(phi), k); };
  const double j0 = integrate(weight, 0.0, max_angle);
  const double j1 = integrate([&](double phi) { return std::cos(phi) * weight(phi); }, 0.0, max_angle);
  const double j2 = integrate(
      [&](double phi) {
        const double c = std::cos(phi);
        return c * c * weight(phi);
      },
      0.0, max_angle);
  return {j1 / j0, j2 / j0};
}

}  // namespace

void validate_law(const RadialLaw& law) {
  std::visit(overloaded{
                 [](const ShellLaw& s) {
                   if (!(s.delta > 0.0 && s.delta < 1.0)) {
                     throw Error(ErrorKind::InvalidArgument, "shell delta must lie in (0, 1)");
                   }
                 },
                 [](const RadialGaussianLaw& g) {
                   if (!(g.sigma > 0.0) || !std::isfinite(g.sigma)) {
                     throw Error(ErrorKind::InvalidArgument, "radial gaussian sigma must be > 0");
                   }
                 },
             },
             law);
}

void validate_region(const TruncationRegion& region, Eigen::Index dim) {
  if (dim < 2) throw Error(ErrorKind::InvalidArgument, "dimension must be at least 2");
  std::visit(overloaded{
                 [](const CompleteRegion&) {},
                 [dim](const HalfSpaceRegion& h) {
                   if (h.axis < 0 || h.axis >= dim) {
                     throw Error(ErrorKind::InvalidRegion, "half-space axis out of range");
                   }
                   if (h.sign != 1 && h.sign != -1) {
                     throw Error(ErrorKind::InvalidRegion, "half-space sign must be +1 or -1");
                   }
                 },
                 [dim](const CapRegion& c) {
                   if (c.axis.size() != dim) {
                     throw Error(ErrorKind::DimensionMismatch, "cap axis dimension mismatch");
                   }
                   if (std::abs(c.axis.norm() - 1.0) > 1e-12) {
                     throw Error(ErrorKind::InvalidRegion, "cap axis must have unit norm");
                   }
                   if (!(c.max_angle > 0.0) || c.max_angle > std::numbers::pi) {
                     throw Error(ErrorKind::InvalidRegion, "cap max_angle must lie in (0, pi]");
                   }
                 },
             },
             region);
}

void DistributionSpec::validate() const {
  if (!truth.is_valid()) {
    throw Error(ErrorKind::InvalidArgument, "distribution truth must have d >= 2 and radius > 0");
  }
  validate_law(radial);
  validate_region(region, dim());
}

bool region_contains(const TruncationRegion& region, const Eigen::Ref<const Vector>& u) {
  return std::visit(overloaded{
                        [](const CompleteRegion&) { return true; },
                        [&u](const HalfSpaceRegion& h) { return h.sign * u(h.axis) >= 0.0; },
                        [&u](const CapRegion& c) {
                          return c.axis.dot(u) >= std::cos(c.max_angle) - kCapBoundaryTolerance;
                        },
                    },
                    region);
}

Vector sample_unit_direction(const TruncationRegion& region, Eigen::Index dim, Rng& rng) {
  validate_region(region, dim);
  for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
    Vector g = standard_normal_vector(dim, rng);
    const double norm = g.norm();
    if (norm == 0.0) continue;
    g /= norm;
    if (region_contains(region, g)) return g;
  }
  throw Error(ErrorKind::Numeric, "direction rejection sampler exhausted its budget");
}

double sample_radial(const RadialLaw& law, double radius, Eigen::Index dim, Rng& rng) {
  return std::visit(
      overloaded{
          [&rng](const ShellLaw& s) {
            std::uniform_real_distribution<double> uniform(1.0 - s.delta, 1.0 + s.delta);
            return uniform(rng);
          },
          [&](const RadialGaussianLaw& g) {
            // Proposal N(mode, sigma^2) on (0, inf); the target/proposal ratio is
            // proportional to rho^{d-1} exp(-(d-1) rho / mode), maximal at the mode.
            const double k = static_cast<double>(dim - 1);
            const double mode = mode_of_radial_gaussian(radius, g.sigma, dim);
            std::normal_distribution<double> proposal(mode, g.sigma);
            std::uniform_real_distribution<double> unit(0.0, 1.0);
            for (int attempt = 0; attempt < kMaxRejections; ++attempt) {
              const double rho = proposal(rng);
              if (rho <= 0.0) continue;
              const double t = rho / mode;
              const double log_accept = k * (std::log(t) - (t - 1.0));
              if (std::log(unit(rng)) <= log_accept) return rho / radius;
            }
            throw Error(ErrorKind::Numeric, "radial rejection sampler exhausted its budget");
          },
      },
      law);
}

Vector sample_observation(const DistributionSpec& spec, Rng& rng) {
  const double w = sample_radial(spec.radial, spec.truth.radius, spec.dim(), rng);
  const Vector u = sample_unit_direction(spec.region, spec.dim(), rng);
  return spec.truth.center + spec.truth.radius * w * u;
}

Matrix sample_observations(const DistributionSpec& spec, Eigen::Index count, Rng& rng) {
  spec.validate();
  Matrix points(count, spec.dim());
  for (Eigen::Index i = 0; i < count; ++i) points.row(i) = sample_observation(spec, rng).transpose();
  return points;
}

RadialMoments radial_moments(const RadialLaw& law, double radius, Eigen::Index dim) {
  validate_law(law);
  return std::visit(overloaded{
                        [](const ShellLaw& s) {
                          const double d = s.delta;
                          const double mean_inv = (std::log1p(d) - std::log1p(-d)) / (2.0 * d);
                          return RadialMoments{1.0, mean_inv, d * d / 3.0};
                        },
                        [&](const RadialGaussianLaw& g) { return gaussian_moments(radius, g.sigma, dim); },
                    },
                    law);
}

DirectionMoments direction_moments(const TruncationRegion& region, Eigen::Index dim) {
  validate_region(region, dim);
  const Matrix identity = Matrix::Identity(dim, dim);
  auto from_cap = [&](const Vector& axis, double max_angle) {
    const auto [m1, m2] = cap_cos_moments(max_angle, dim);
    const Matrix aat = axis * axis.transpose();
    const double lateral = (1.0 - m2) / static_cast<double>(dim - 1);
    return DirectionMoments{m1 * axis, m2 * aat + lateral * (identity - aat)};
  };
  return std::visit(overloaded{
                        [&](const CompleteRegion&) {
                          return DirectionMoments{Vector::Zero(dim), identity / static_cast<double>(dim)};
                        },
                        [&](const HalfSpaceRegion& h) {
                          Vector axis = Vector::Zero(dim);
                          axis(h.axis) = h.sign;
                          return from_cap(axis, std::numbers::pi / 2.0);
                        },
                        [&](const CapRegion& c) { return from_cap(c.axis, c.max_angle); },
                    },
                    region);
}

double theoretical_r_star(const DistributionSpec& spec) {
  spec.validate();
  return spec.truth.radius * radial_moments(spec.radial, spec.truth.radius, spec.dim()).mean;
}

double theoretical_beta(const DistributionSpec& spec) {
  spec.validate();
  const RadialMoments m = radial_moments(spec.radial, spec.truth.radius, spec.dim());
  return m.mean * m.mean_inv;
}

SphereParams identifiable_params(const DistributionSpec& spec) {
  return SphereParams{spec.truth.center, theoretical_r_star(spec)};
}

namespace {

std::vector<double> to_std(const Vector& v) { return {v.data(), v.data() + v.size()}; }

Vector from_std(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

void to_json(nlohmann::json& j, const DistributionSpec& spec) {
  j = nlohmann::json::object();
  j["center"] = to_std(spec.truth.center);
  j["radius"] = spec.truth.radius;
  std::visit(overloaded{
                 [&](const ShellLaw& s) { j["radial"] = {{"shell", s.delta}}; },
                 [&](const RadialGaussianLaw& g) { j["radial"] = {{"gaussian", g.sigma}}; },
             },
             spec.radial);
  std::visit(overloaded{
                 [&](const CompleteRegion&) { j["region"] = "complete"; },
                 [&](const HalfSpaceRegion& h) {
                   j["region"] = {{"half_space", {{"axis", h.axis}, {"sign", h.sign}}}};
                 },
                 [&](const CapRegion& c) {
                   j["region"] = {{"cap", {{"axis", to_std(c.axis)}, {"max_angle", c.max_angle}}}};
                 },
             },
             spec.region);
}

void from_json(const nlohmann::json& j, DistributionSpec& spec) {
  try {
    spec.truth.center = from_std(j.at("center").get<std::vector<double>>());
    spec.truth.radius = j.at("radius").get<double>();

    const auto& radial = j.at("radial");
    if (radial.contains("shell")) {
      spec.radial = ShellLaw{radial.at("shell").get<double>()};
    } else if (radial.contains("gaussian")) {
      spec.radial = RadialGaussianLaw{radial.at("gaussian").get<double>()};
    } else {
      throw Error(ErrorKind::Parse, "radial law must be {\"shell\": delta} or {\"gaussian\": sigma}");
    }

    const auto& region = j.contains("region") ? j.at("region") : nlohmann::json("complete");
    if (region.is_string()) {
      if (region.get<std::string>() != "complete") {
        throw Error(ErrorKind::Parse, "unknown region '" + region.get<std::string>() + "'");
      }
      spec.region = CompleteRegion{};
    } else if (region.contains("half_space")) {
      const auto& h = region.at("half_space");
      spec.region = HalfSpaceRegion{h.at("axis").get<int>(), h.at("sign").get<int>()};
    } else if (region.contains("cap")) {
      const auto& c = region.at("cap");
      spec.region = CapRegion{from_std(c.at("axis").get<std::vector<double>>()),
                              c.at("max_angle").get<double>()};
    } else {
      throw Error(ErrorKind::Parse, "region must be \"complete\", half_space or cap");
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, std::string("distribution spec: ") + e.what());
  }
  spec.validate();
}

}  // namespace spherefit

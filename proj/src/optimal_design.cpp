#include "posthoc/optimal_design.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace posthoc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

UtilitySpec UtilitySpec::power(double gamma) {
  if (!(gamma > 0) || gamma == 1 || !std::isfinite(gamma))
    throw InvalidArgument("power utility needs gamma > 0, gamma != 1");
  return UtilitySpec(Kind::power, gamma);
}

UtilitySpec UtilitySpec::neyman_pearson(double alpha_star) {
  if (!(alpha_star > 0 && alpha_star < 1)) throw InvalidArgument("Neyman-Pearson utility needs 0 < alpha* < 1");
  return UtilitySpec(Kind::neyman_pearson, alpha_star);
}

UtilitySpec UtilitySpec::parse(std::string_view text) {
  if (text == "log") return log_utility();
  const auto colon = text.find(':');
  if (colon == std::string_view::npos) throw InvalidArgument("unknown utility '" + std::string(text) + "'");
  const auto kind = text.substr(0, colon);
  const double v = parse_scalar<double>(text.substr(colon + 1));
  if (kind == "power") return power(v);
  if (kind == "np") return neyman_pearson(v);
  throw InvalidArgument("unknown utility '" + std::string(text) + "'");
}

std::string UtilitySpec::str() const {
  switch (kind_) {
    case Kind::log:
      return "log";
    case Kind::power:
      return "power:" + ScalarTraits<double>::format(param_);
    case Kind::neyman_pearson:
      return "np:" + ScalarTraits<double>::format(param_);
  }
  return "?";
}

double UtilitySpec::operator()(double x) const {
  switch (kind_) {
    case Kind::log:
      if (x == 0) return -kInf;
      return std::log(x);
    case Kind::power: {
      const double g = param_;
      if (x == 0) return g < 1 ? 0.0 : -kInf;
      if (std::isinf(x)) return g < 1 ? kInf : 0.0;
      return std::pow(x, 1 - g) / (1 - g);
    }
    case Kind::neyman_pearson:
      return std::min(x, 1 / param_);
  }
  return 0;
}

UtilityOptimum utility_optimal(const SimplePair<double>& pair, const UtilitySpec& U) {
  if (U.kind() == UtilitySpec::Kind::neyman_pearson) {
    auto np = np_optimal(pair, U.parameter());
    auto e = dual(np.p);
    const double mean = expectation<double>(pair.P, e.values()).to_double();
    return {e, np.lambda.to_double(), mean};
  }

  const std::size_t n = pair.size();
  std::vector<Extended<double>> r(n);
  for (std::size_t x = 0; x < n; ++x) r[x] = density_ratio(pair.P.prob(x), pair.Q.prob(x));
  const double inv_power = U.kind() == UtilitySpec::Kind::log ? 1.0 : 1.0 / U.parameter();

  // e_lambda(x) = (U')^{-1}(lambda r(x)) = (lambda r(x))^{-1/gamma}, gamma = 1 for log.
  auto e_at = [&](double lambda) {
    std::vector<Extended<double>> e(n);
    for (std::size_t x = 0; x < n; ++x) {
      if (r[x].is_infinite()) e[x] = Extended<double>(0.0);
      else if (r[x].is_zero()) e[x] = Extended<double>::infinity();
      else e[x] = Extended<double>(std::pow(lambda * r[x].finite(), -inv_power));
    }
    return e;
  };
  // E_P[e_lambda] = lambda^{-1/gamma} E_P[r^{-1/gamma}], so the normalising
  // lambda is E_P[r^{-1/gamma}]^gamma.
  double moment = 0;
  for (std::size_t x = 0; x < n; ++x)
    if (pair.P.prob(x) > 0 && r[x].is_finite()) moment += pair.P.prob(x) * std::pow(r[x].finite(), -inv_power);
  if (!(moment > 0) || !std::isfinite(moment))
    throw Error("utility_optimal(" + U.str() + "): no normalising lambda");
  const double lambda = std::pow(moment, 1.0 / inv_power);
  const double g = expectation<double>(pair.P, e_at(lambda)).to_double() - 1.0;
  EvidenceVariable<double> e(pair.outcomes(), e_at(lambda), Scale::e_value);
  return {e, lambda, g + 1.0};
}

GridOptimum brute_force_optimal(const SimplePair<double>& pair, const UtilitySpec& U, int resolution) {
  const std::size_t n = pair.size();
  if (n > 6) throw InvalidArgument("brute_force_optimal: at most 6 outcomes");
  if (resolution < 1) throw InvalidArgument("brute_force_optimal: resolution must be >= 1");
  for (std::size_t x = 0; x < n; ++x)
    if (!(pair.P.prob(x) > 0)) throw InvalidArgument("brute_force_optimal: outcome '" + pair.outcomes()[x] + "' has f_P = 0");

  std::vector<int> k(n, 0);
  std::vector<int> best_k;
  double best = -kInf;
  const double N = resolution;
  auto score = [&] {
    double u = 0;
    for (std::size_t x = 0; x < n; ++x) {
      const double q = pair.Q.prob(x);
      if (q == 0) continue;
      u += q * U((k[x] / N) / pair.P.prob(x));
    }
    return u;
  };
  auto rec = [&](auto&& self, std::size_t pos, int left) -> void {
    if (pos + 1 == n) {
      k[pos] = left;
      const double u = score();
      if (best_k.empty() || u > best) {
        best = u;
        best_k = k;
      }
      return;
    }
    for (int c = 0; c <= left; ++c) {
      k[pos] = c;
      self(self, pos + 1, left - c);
    }
  };
  rec(rec, 0, resolution);
  std::vector<Extended<double>> e;
  for (std::size_t x = 0; x < n; ++x) e.emplace_back((best_k[x] / N) / pair.P.prob(x));
  return {EvidenceVariable<double>(pair.outcomes(), std::move(e), Scale::e_value), best};
}

SimplePair<double> gaussian_pair(std::size_t cells, double shift) {
  if (cells < 2) throw InvalidArgument("gaussian_pair: need at least 2 cells");
  const boost::math::normal_distribution<double> N01(0.0, 1.0);
  std::vector<double> edges(cells + 1);
  edges.front() = -8.0;
  edges.back() = 8.0;
  for (std::size_t i = 1; i < cells; ++i) edges[i] = boost::math::quantile(N01, static_cast<double>(i) / cells);
  std::vector<OutcomeId> ids;
  std::vector<double> p, q;
  double sp = 0, sq = 0;
  char buf[32];
  for (std::size_t i = 0; i < cells; ++i) {
    std::snprintf(buf, sizeof buf, "c%05zu", i);
    ids.emplace_back(buf);
    const double pi = boost::math::cdf(N01, edges[i + 1]) - boost::math::cdf(N01, edges[i]);
    const double qi = boost::math::cdf(N01, edges[i + 1] - shift) - boost::math::cdf(N01, edges[i] - shift);
    p.push_back(pi);
    q.push_back(qi);
    sp += pi;
    sq += qi;
  }
  for (auto& v : p) v /= sp;
  for (auto& v : q) v /= sq;
  return SimplePair<double>(DiscreteSpace<double>(ids, std::move(p)), DiscreteSpace<double>(ids, std::move(q)));
}

GaussianComparison compare_gaussian(const SimplePair<double>& pair, double alpha, double shift) {
  GaussianComparison out{};
  out.alpha = alpha;
  auto np = np_optimal(pair, alpha);
  out.classical_critical_lr = np.lambda.to_double();
  double p_below = 0, p_at = 0, q_below = 0, q_at = 0;
  for (std::size_t x = 0; x < pair.size(); ++x) {
    const auto r = density_ratio(pair.P.prob(x), pair.Q.prob(x));
    if (r < np.c) {
      p_below += pair.P.prob(x);
      q_below += pair.Q.prob(x);
    } else if (r == np.c) {
      p_at += pair.P.prob(x);
      q_at += pair.Q.prob(x);
    }
  }
  out.classical_power = q_below + (p_at > 0 ? q_at * (alpha - p_below) / p_at : 0.0);

  out.posthoc_threshold = 1.0 / alpha;
  out.threshold_consistent = true;
  const auto p_star = log_optimal(pair);
  for (std::size_t x = 0; x < pair.size(); ++x) {
    const bool rejects = p_star.values()[x] <= Extended<double>(alpha);
    const double lr = density_ratio(pair.Q.prob(x), pair.P.prob(x)).to_double();
    if (rejects) out.posthoc_power += pair.Q.prob(x);
    if (rejects != (lr >= out.posthoc_threshold)) out.threshold_consistent = false;
  }
  const boost::math::normal_distribution<double> N01(0.0, 1.0);
  const double z = boost::math::quantile(boost::math::complement(N01, alpha));
  out.reference_critical_lr = std::exp(z * shift - shift * shift / 2);
  return out;
}

}  // namespace posthoc

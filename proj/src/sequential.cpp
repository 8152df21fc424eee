#include "posthoc/sequential.hpp"

#include <cmath>
#include <sstream>

namespace posthoc {

IncrementLaw::IncrementLaw(std::vector<double> v, std::vector<double> p) : values(std::move(v)), probs(std::move(p)) {
  if (values.empty() || values.size() != probs.size())
    throw InvalidArgument("IncrementLaw: values and probs must be nonempty and of equal length");
  double total = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!(values[i] >= 0) || !std::isfinite(values[i])) throw InvalidArgument("IncrementLaw: values must be finite and >= 0");
    if (!(probs[i] >= 0)) throw InvalidArgument("IncrementLaw: probabilities must be >= 0");
    total += probs[i];
  }
  if (std::abs(total - 1.0) > kTolerance) throw InvalidArgument("IncrementLaw: probabilities must sum to 1");
}

double IncrementLaw::mean() const {
  double m = 0;
  for (std::size_t i = 0; i < values.size(); ++i) m += values[i] * probs[i];
  return m;
}

double IncrementLaw::sample(CounterRng& rng) const {
  const double u = rng.uniform01();
  double c = 0;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    c += probs[i];
    if (u < c) return values[i];
  }
  return values.back();
}

const char* to_string(ProcessClass c) {
  switch (c) {
    case ProcessClass::martingale:
      return "martingale";
    case ProcessClass::supermartingale:
      return "supermartingale";
    case ProcessClass::eprocess:
      return "eprocess";
    case ProcessClass::unrestricted:
      return "unrestricted";
  }
  return "?";
}

ProcessClass parse_process_class(std::string_view text) {
  if (text == "martingale") return ProcessClass::martingale;
  if (text == "supermartingale") return ProcessClass::supermartingale;
  if (text == "eprocess") return ProcessClass::eprocess;
  if (text == "unrestricted") return ProcessClass::unrestricted;
  throw InvalidArgument("unknown process class '" + std::string(text) + "'");
}

ProcessModel::ProcessModel(double m0, std::vector<IncrementLaw> members, ProcessClass cls, int horizon)
    : m0_(m0), members_(std::move(members)), cls_(cls), horizon_(horizon) {
  if (!(m0_ >= 0) || !std::isfinite(m0_)) throw InvalidArgument("ProcessModel: M_0 must be finite and >= 0");
  if (horizon_ < 1) throw InvalidArgument("ProcessModel: horizon must be >= 1");
  if (members_.empty()) throw InvalidArgument("ProcessModel: need at least one increment law");
  if ((cls_ == ProcessClass::martingale || cls_ == ProcessClass::supermartingale) && members_.size() != 1)
    throw InvalidArgument("ProcessModel: (super)martingale models take exactly one increment law");
  for (std::size_t m = 0; m < members_.size(); ++m) {
    const double mean = members_[m].mean();
    std::ostringstream msg;
    msg << "ProcessModel: member " << m << " has E[Z] = " << mean << ", inconsistent with class " << to_string(cls_);
    if (cls_ == ProcessClass::martingale && std::abs(mean - 1.0) > kTolerance) throw InvalidArgument(msg.str());
    if ((cls_ == ProcessClass::supermartingale || cls_ == ProcessClass::eprocess) && mean > 1.0 + kTolerance)
      throw InvalidArgument(msg.str());
  }
}

StoppingRule StoppingRule::immediate() {
  return StoppingRule("tau=0", 0, [](std::span<const double>) { return true; });
}

StoppingRule StoppingRule::fixed(int t) {
  return StoppingRule("tau=" + std::to_string(t), t, [](std::span<const double>) { return false; });
}

StoppingRule StoppingRule::hitting(double level, int cap) {
  std::ostringstream name;
  name << "first M_t>=" << level << " cap " << cap;
  return StoppingRule(name.str(), cap, [level](std::span<const double> prefix) { return prefix.back() >= level; });
}

StoppingRule StoppingRule::falling(double level, int cap) {
  std::ostringstream name;
  name << "first M_t<=" << level << " cap " << cap;
  return StoppingRule(name.str(), cap, [level](std::span<const double> prefix) { return prefix.back() <= level; });
}

int StoppingRule::stopping_time(std::span<const double> path) const {
  if (!cap_) throw InvalidArgument("stopping rule '" + name_ + "' is unbounded");
  const int last = std::min<int>(*cap_, static_cast<int>(path.size()) - 1);
  for (int t = 0; t < last; ++t)
    if (stop_(path.subspan(0, static_cast<std::size_t>(t) + 1))) return t;
  return last;
}

namespace {

void fill_path(const ProcessModel& model, const IncrementLaw& z, std::uint64_t seed, std::uint64_t i, double* out) {
  CounterRng rng(seed, i);
  out[0] = model.initial();
  for (int t = 1; t <= model.horizon(); ++t) out[t] = out[t - 1] * z.sample(rng);
}

}  // namespace

PathCollection simulate_paths(const ProcessModel& model, std::size_t n, std::uint64_t seed, std::size_t member) {
  if (n == 0) throw InvalidArgument("simulate_paths: n must be >= 1");
  const auto& z = model.members().at(member);
  PathCollection pc;
  pc.n = n;
  pc.horizon = model.horizon();
  const std::size_t len = static_cast<std::size_t>(model.horizon()) + 1;
  pc.values.resize(n * len);
  for (std::size_t i = 0; i < n; ++i) fill_path(model, z, seed, i, pc.values.data() + i * len);
  return pc;
}

std::string paths_csv(const PathCollection& paths) {
  std::string out = "path_id,t,M_t\n";
  for (std::size_t i = 0; i < paths.n; ++i) {
    auto p = paths.path(i);
    for (std::size_t t = 0; t < p.size(); ++t)
      out += std::to_string(i) + "," + std::to_string(t) + "," + ScalarTraits<double>::format(p[t]) + "\n";
  }
  return out;
}

VilleReport ville_equality_check(const ProcessModel& model, const StoppingRule& rule, std::uint64_t n,
                                 std::uint64_t seed, unsigned workers) {
  if (!rule.bounded()) throw InvalidArgument("ville_equality_check: stopping rule '" + rule.name() + "' is unbounded");
  if (n == 0) throw InvalidArgument("ville_equality_check: n must be >= 1");
  VilleReport rep;
  rep.rule = rule.name();
  rep.process_class = model.process_class();
  rep.initial = model.initial();
  rep.n = n;
  const std::size_t len = static_cast<std::size_t>(model.horizon()) + 1;
  bool first = true;
  for (std::size_t m = 0; m < model.members().size(); ++m) {
    const auto& z = model.members()[m];
    std::vector<char> identity_ok((n + 4095) / 4096, 1);
    auto sums = reduce_moments(
        n,
        [&](std::uint64_t i) {
          std::vector<double> path(len);
          fill_path(model, z, seed, i, path.data());
          const double m_tau = path[static_cast<std::size_t>(rule.stopping_time(path))];
          // Post-hoc statistic over candidate levels 1/M_s, s <= T.
          std::vector<Extended<double>> candidates(path.begin(), path.end());
          if (markov_inner_sup(Extended<double>(m_tau), candidates) != Extended<double>(m_tau))
            identity_ok[i / 4096] = 0;
          return m_tau;
        },
        workers);
    const auto est = estimate_from(sums);
    for (char ok : identity_ok) rep.identity_holds = rep.identity_holds && ok;
    if (first || est.estimate > rep.mean) {
      rep.mean = est.estimate;
      rep.standard_error = est.standard_error;
      rep.worst_member = m;
      first = false;
    }
  }
  const double band = 3 * rep.standard_error;
  const bool immediate = rule.cap() && *rule.cap() == 0;
  switch (model.process_class()) {
    case ProcessClass::martingale:
      rep.pass = std::abs(rep.mean - rep.initial) <= band + kTolerance;
      break;
    case ProcessClass::supermartingale:
    case ProcessClass::eprocess:
    case ProcessClass::unrestricted:
      rep.pass = rep.mean <= rep.initial + band + kTolerance;
      if (immediate) rep.pass = rep.pass && rep.mean == rep.initial;
      break;
  }
  rep.pass = rep.pass && rep.identity_holds;
  return rep;
}

AnytimeReport anytime_validity_check(const std::vector<PathCollection>& paths_per_member,
                                     const std::vector<StoppingRule>& rules) {
  if (rules.empty()) throw InvalidArgument("anytime_validity_check: empty rule set");
  if (paths_per_member.empty()) throw InvalidArgument("anytime_validity_check: no hypothesis members");
  AnytimeReport rep;
  rep.valid = true;
  bool first = true;
  for (std::size_t m = 0; m < paths_per_member.size(); ++m) {
    const auto& pc = paths_per_member[m];
    for (const auto& rule : rules) {
      if (!rule.bounded()) throw InvalidArgument("anytime_validity_check: stopping rule '" + rule.name() + "' is unbounded");
      MomentSums s;
      for (std::size_t i = 0; i < pc.n; ++i) {
        auto path = pc.path(i);
        const double v = path[static_cast<std::size_t>(rule.stopping_time(path))];
        s.sum += v;
        s.sum_sq += v * v;
        ++s.count;
      }
      const auto est = estimate_from(s);
      const bool within = est.estimate <= 1.0 + 3 * est.standard_error + kTolerance;
      rep.cells.push_back({m, rule.name(), est.estimate, est.standard_error, within});
      rep.valid = rep.valid && within;
      if (first || est.estimate > rep.sup_mean) rep.sup_mean = est.estimate;
      first = false;
    }
  }
  return rep;
}

}  // namespace posthoc

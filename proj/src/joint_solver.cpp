#include "rmtrack/joint_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "rmtrack/errors.hpp"

namespace rmtrack {

namespace {

std::atomic<std::uint64_t> g_solve_count{0};

int find_root(std::vector<int>& parent, int x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}

void unite(std::vector<int>& parent, int a, int b) {
  a = find_root(parent, a);
  b = find_root(parent, b);
  if (a != b) parent[std::max(a, b)] = std::min(a, b);
}

// Branch-and-bound over one connected component. Variables are the
// component's rider hypotheses in index order followed by its motorcycle
// hypotheses in index order; each is tried at 1 before 0. The incumbent is
// replaced only on strict improvement, which combined with the 1-first
// order makes the kept optimum the lexicographically greatest one.
class CompSolver {
public:
  CompSolver(const JointProblem& p, std::vector<int> r_hyps, std::vector<int> m_hyps)
      : p_(p), r_hyps_(std::move(r_hyps)), m_hyps_(std::move(m_hyps)) {
    const int nr = static_cast<int>(r_hyps_.size());
    const int nm = static_cast<int>(m_hyps_.size());
    n_ = nr + nm;
    chosen_.assign(n_, 0);
    best_assign_.assign(n_, 0);

    // Per-rider optimistic association gain, independent of moto choices.
    bonus_cap_.assign(nr, 0.0);
    for (int a = 0; a < nr; ++a) {
      double cap = 0.0;
      for (const int j : m_hyps_) {
        const int i = r_hyps_[a];
        if (p_.feasible_at(i, j))
          cap = std::max(cap, p_.lambda3 * p_.assoc_at(i, j));
      }
      bonus_cap_[a] = cap;
    }

    // suffix_[k]: optimistic value of everything not yet decided at depth k.
    suffix_.assign(n_ + 1, 0.0);
    for (int k = n_ - 1; k >= 0; --k) {
      double v = std::max(0.0, lambda_of(k) * score_of(k));
      if (k < nr) v += bonus_cap_[k];
      suffix_[k] = suffix_[k + 1] + v;
    }
  }

  void run() {
    best_ = -std::numeric_limits<double>::infinity();
    dfs(0, 0.0, 0.0);
  }

  double best_objective() const { return best_; }
  const std::vector<char>& best_assign() const { return best_assign_; }
  const std::vector<int>& r_hyps() const { return r_hyps_; }
  const std::vector<int>& m_hyps() const { return m_hyps_; }

private:
  double lambda_of(int k) const {
    return k < static_cast<int>(r_hyps_.size()) ? p_.lambda1 : p_.lambda2;
  }
  double score_of(int k) const {
    const int nr = static_cast<int>(r_hyps_.size());
    return k < nr ? p_.riders[r_hyps_[k]].score : p_.motos[m_hyps_[k - nr]].score;
  }

  bool conflicts(int k) const {
    const int nr = static_cast<int>(r_hyps_.size());
    const bool rider = k < nr;
    const Hypothesis& h = rider ? p_.riders[r_hyps_[k]] : p_.motos[m_hyps_[k - nr]];
    const int lo = rider ? 0 : nr;
    for (int o = lo; o < k; ++o) {
      if (!chosen_[o]) continue;
      const Hypothesis& g = rider ? p_.riders[r_hyps_[o]] : p_.motos[m_hyps_[o - nr]];
      if (g.track == h.track || g.det == h.det) return true;
    }
    return false;
  }

  // Association gain of the completed leaf: best strictly positive
  // lambda3-weighted a_ij per chosen rider over chosen motorcycles.
  double leaf_bonus() const {
    const int nr = static_cast<int>(r_hyps_.size());
    const int nm = static_cast<int>(m_hyps_.size());
    double total = 0.0;
    for (int a = 0; a < nr; ++a) {
      if (!chosen_[a]) continue;
      const int i = r_hyps_[a];
      double gain = 0.0;
      for (int b = 0; b < nm; ++b) {
        if (!chosen_[nr + b]) continue;
        const int j = m_hyps_[b];
        if (!p_.feasible_at(i, j)) continue;
        gain = std::max(gain, p_.lambda3 * p_.assoc_at(i, j));
      }
      total += gain;
    }
    return total;
  }

  void dfs(int k, double acc, double sel_bonus_cap) {
    // acc counts decided t-scores; sel_bonus_cap caps chosen riders'
    // association gains; suffix_ caps everything undecided.
    if (acc + sel_bonus_cap + suffix_[k] <= best_) return;
    if (k == n_) {
      const double total = acc + leaf_bonus();
      if (total > best_) {
        best_ = total;
        best_assign_ = chosen_;
      }
      return;
    }
    if (!conflicts(k)) {
      chosen_[k] = 1;
      const bool rider = k < static_cast<int>(r_hyps_.size());
      dfs(k + 1, acc + lambda_of(k) * score_of(k),
          sel_bonus_cap + (rider ? bonus_cap_[k] : 0.0));
      chosen_[k] = 0;
    }
    dfs(k + 1, acc, sel_bonus_cap);
  }

  const JointProblem& p_;
  std::vector<int> r_hyps_, m_hyps_;
  int n_ = 0;
  std::vector<char> chosen_, best_assign_;
  std::vector<double> suffix_, bonus_cap_;
  double best_ = 0.0;
};

void validate_problem(const JointProblem& p, int cap) {
  const std::size_t nr = p.riders.size();
  const std::size_t nm = p.motos.size();
  if (static_cast<int>(nr) > cap || static_cast<int>(nm) > cap)
    throw CapExceededError("solve_joint: " + std::to_string(nr) + " rider / " +
                           std::to_string(nm) + " motorcycle hypotheses exceed cap " +
                           std::to_string(cap));
  if (p.assoc.size() != nr * nm || p.feasible.size() != nr * nm)
    throw std::invalid_argument("solve_joint: assoc/feasible size mismatch");
  if (!(p.lambda3 >= 0.0) || !std::isfinite(p.lambda1) || !std::isfinite(p.lambda2) ||
      !std::isfinite(p.lambda3))
    throw std::invalid_argument("solve_joint: lambdas must be finite, lambda3 >= 0");
  for (const Hypothesis& h : p.riders)
    if (!std::isfinite(h.score))
      throw std::invalid_argument("solve_joint: non-finite rider score");
  for (const Hypothesis& h : p.motos)
    if (!std::isfinite(h.score))
      throw std::invalid_argument("solve_joint: non-finite motorcycle score");
  for (std::size_t i = 0; i < nr; ++i)
    for (std::size_t j = 0; j < nm; ++j)
      if (p.feasible[i * nm + j] && !std::isfinite(p.assoc[i * nm + j]))
        throw std::invalid_argument("solve_joint: non-finite feasible assoc score");
}

}  // namespace

JointSolution solve_joint(const JointProblem& p, int cap) {
  validate_problem(p, cap);
  const int nr = static_cast<int>(p.riders.size());
  const int nm = static_cast<int>(p.motos.size());

  JointSolution sol;
  sol.t_r.assign(nr, 0);
  sol.t_m.assign(nm, 0);
  sol.e.assign(static_cast<std::size_t>(nr) * nm, 0);

  // Union hypotheses that can interact: same-class conflicts (shared track
  // or detection) and cross-class entries able to contribute positive
  // association gain. Everything else separates into independent programs.
  std::vector<int> parent(nr + nm);
  for (int x = 0; x < nr + nm; ++x) parent[x] = x;
  for (int i = 0; i < nr; ++i)
    for (int o = i + 1; o < nr; ++o)
      if (p.riders[i].track == p.riders[o].track || p.riders[i].det == p.riders[o].det)
        unite(parent, i, o);
  for (int j = 0; j < nm; ++j)
    for (int o = j + 1; o < nm; ++o)
      if (p.motos[j].track == p.motos[o].track || p.motos[j].det == p.motos[o].det)
        unite(parent, nr + j, nr + o);
  if (p.lambda3 > 0.0)
    for (int i = 0; i < nr; ++i)
      for (int j = 0; j < nm; ++j)
        if (p.feasible_at(i, j) && p.assoc_at(i, j) > 0.0) unite(parent, i, nr + j);

  std::vector<std::vector<int>> comp_r(nr + nm), comp_m(nr + nm);
  for (int i = 0; i < nr; ++i) comp_r[find_root(parent, i)].push_back(i);
  for (int j = 0; j < nm; ++j) comp_m[find_root(parent, nr + j)].push_back(j);

  for (int root = 0; root < nr + nm; ++root) {
    if (comp_r[root].empty() && comp_m[root].empty()) continue;
    CompSolver solver(p, comp_r[root], comp_m[root]);
    solver.run();
    sol.objective += solver.best_objective();
    const auto& assign = solver.best_assign();
    const int cnr = static_cast<int>(solver.r_hyps().size());
    for (int a = 0; a < cnr; ++a) sol.t_r[solver.r_hyps()[a]] = assign[a];
    for (std::size_t b = 0; b < solver.m_hyps().size(); ++b)
      sol.t_m[solver.m_hyps()[b]] = assign[cnr + b];
  }

  // e follows from t: per chosen rider, the chosen feasible motorcycle with
  // the highest strictly positive gain, smallest index on ties.
  if (p.lambda3 > 0.0) {
    for (int i = 0; i < nr; ++i) {
      if (!sol.t_r[i]) continue;
      int pick = -1;
      double pick_gain = 0.0;
      for (int j = 0; j < nm; ++j) {
        if (!sol.t_m[j] || !p.feasible_at(i, j)) continue;
        const double gain = p.lambda3 * p.assoc_at(i, j);
        if (gain > pick_gain) {
          pick_gain = gain;
          pick = j;
        }
      }
      if (pick >= 0) sol.e[static_cast<std::size_t>(i) * nm + pick] = 1;
    }
  }

  verify_joint(p, sol);
  g_solve_count.fetch_add(1, std::memory_order_relaxed);
  return sol;
}

void verify_joint(const JointProblem& p, const JointSolution& s) {
  const int nr = static_cast<int>(p.riders.size());
  const int nm = static_cast<int>(p.motos.size());
  if (static_cast<int>(s.t_r.size()) != nr || static_cast<int>(s.t_m.size()) != nm ||
      s.e.size() != static_cast<std::size_t>(nr) * nm)
    throw std::logic_error("joint solution: size mismatch");

  const auto check_exclusive = [](const std::vector<Hypothesis>& hyps,
                                  const std::vector<char>& t, const char* cls) {
    for (std::size_t a = 0; a < hyps.size(); ++a) {
      if (!t[a]) continue;
      for (std::size_t b = a + 1; b < hyps.size(); ++b) {
        if (!t[b]) continue;
        if (hyps[a].track == hyps[b].track)
          throw std::logic_error(std::string("joint solution: ") + cls +
                                 " track chosen twice");
        if (hyps[a].det == hyps[b].det)
          throw std::logic_error(std::string("joint solution: ") + cls +
                                 " detection chosen twice");
      }
    }
  };
  check_exclusive(p.riders, s.t_r, "rider");
  check_exclusive(p.motos, s.t_m, "motorcycle");

  for (int i = 0; i < nr; ++i) {
    int row_sum = 0;
    for (int j = 0; j < nm; ++j) {
      const char eij = s.e[static_cast<std::size_t>(i) * nm + j];
      if (!eij) continue;
      ++row_sum;
      if (!s.t_r[i]) throw std::logic_error("joint solution: e without rider");
      if (!s.t_m[j]) throw std::logic_error("joint solution: e without motorcycle");
      if (!p.feasible_at(i, j))
        throw std::logic_error("joint solution: e on infeasible entry");
    }
    if (row_sum > 1)
      throw std::logic_error("joint solution: rider associated twice");
  }

  double obj = 0.0;
  for (int i = 0; i < nr; ++i)
    if (s.t_r[i]) obj += p.lambda1 * p.riders[i].score;
  for (int j = 0; j < nm; ++j)
    if (s.t_m[j]) obj += p.lambda2 * p.motos[j].score;
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nm; ++j)
      if (s.e[static_cast<std::size_t>(i) * nm + j])
        obj += p.lambda3 * p.assoc_at(i, j);
  if (std::abs(obj - s.objective) > 1e-9)
    throw std::logic_error("joint solution: objective mismatch");
}

std::uint64_t joint_solve_count() { return g_solve_count.load(std::memory_order_relaxed); }

}  // namespace rmtrack

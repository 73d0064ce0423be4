#pragma once

#include <cstdint>
#include <vector>

namespace rmtrack {

/// One candidate (track, detection) pairing with its affinity score.
struct Hypothesis {
  int track = -1;
  int det = -1;
  double score = 0.0;
};

/// The per-frame 0-1 program: pick rider hypotheses t_i, motorcycle
/// hypotheses t_j, and rider-to-motorcycle association indicators e_ij.
/// assoc / feasible are riders x motos row-major; feasible = 0 encodes an
/// entry locked out entirely (e_ij forced to 0).
struct JointProblem {
  std::vector<Hypothesis> riders;
  std::vector<Hypothesis> motos;
  std::vector<double> assoc;
  std::vector<char> feasible;
  double lambda1 = 1.0;
  double lambda2 = 1.0;
  double lambda3 = 1.0;

  double assoc_at(int i, int j) const {
    return assoc[static_cast<std::size_t>(i) * motos.size() + j];
  }
  bool feasible_at(int i, int j) const {
    return feasible[static_cast<std::size_t>(i) * motos.size() + j] != 0;
  }
};

struct JointSolution {
  std::vector<char> t_r;
  std::vector<char> t_m;
  std::vector<char> e;  // riders x motos row-major
  double objective = 0.0;
};

/// Exact maximizer of
///   lambda1 sum t_i s_i  +  lambda2 sum t_j s_j  +  lambda3 sum e_ij a_ij
/// subject to: per class, hypotheses sharing a track or a detection are
/// mutually exclusive; e_ij <= t_i and e_ij <= t_j; at most one association
/// per rider hypothesis; e_ij = 0 on infeasible entries.
///
/// Method: split the hypothesis graph into connected components (conflict
/// edges plus gainful association entries) and run depth-first
/// branch-and-bound per component, trying t=1 before t=0 in hypothesis
/// index order and replacing the incumbent only on strict improvement, so
/// the returned t vectors are the lexicographically greatest optimum.
/// e follows from t: each chosen rider associates with the chosen feasible
/// motorcycle of highest a_ij, smallest index on ties, and only when that
/// a_ij is strictly positive (so lambda3 = 0 never mints associations).
///
/// Every solve is verified against the constraint set before returning and
/// counted in joint_solve_count(). Throws CapExceededError when either
/// class exceeds cap hypotheses, std::invalid_argument on non-finite
/// scores, lambda3 < 0, or malformed sizes.
JointSolution solve_joint(const JointProblem& p, int cap = 64);

/// Throws std::logic_error naming the violated constraint family, if any.
void verify_joint(const JointProblem& p, const JointSolution& s);

/// Number of solve_joint calls that completed in this process.
std::uint64_t joint_solve_count();

}  // namespace rmtrack

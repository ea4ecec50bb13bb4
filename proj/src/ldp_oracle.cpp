#include "scbf/ldp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <queue>
#include <sstream>
#include <string>

#include <json.hpp>

#include "scbf/error.hpp"
#include "scbf/noise.hpp"

namespace scbf {

namespace {

constexpr double kStochasticTol = 1e-12;

std::vector<int> reachable(const Eigen::MatrixXd& P, int from) {
  const int n = static_cast<int>(P.rows());
  std::vector<int> level(static_cast<std::size_t>(n), -1);
  std::queue<int> q;
  level[static_cast<std::size_t>(from)] = 0;
  q.push(from);
  while (!q.empty()) {
    const int x = q.front();
    q.pop();
    for (int y = 0; y < n; ++y)
      if (P(x, y) > 0.0 && level[static_cast<std::size_t>(y)] < 0) {
        level[static_cast<std::size_t>(y)] = level[static_cast<std::size_t>(x)] + 1;
        q.push(y);
      }
  }
  return level;
}

double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.size() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

bool member(const std::vector<int>& K, int x) { return std::find(K.begin(), K.end(), x) != K.end(); }

// Objective, gradient and Hessian of F(w) = sum_x nu_x (w_x - log sum_y P_xy e^{w_y}).
struct DvEval {
  double value = 0.0;
  Eigen::VectorXd grad;
  Eigen::MatrixXd hess;
};

DvEval dv_eval(const ProbVector& nu, const Eigen::MatrixXd& P, const Eigen::VectorXd& w, bool derivatives) {
  const int n = static_cast<int>(P.rows());
  DvEval e{0.0, Eigen::VectorXd::Zero(n), Eigen::MatrixXd::Zero(n, n)};
  const double wmax = w.maxCoeff();
  Eigen::VectorXd q(n);
  for (int x = 0; x < n; ++x) {
    if (nu(x) == 0.0) continue;
    double s = 0.0;
    for (int y = 0; y < n; ++y) {
      q(y) = P(x, y) * std::exp(w(y) - wmax);
      s += q(y);
    }
    e.value += nu(x) * (w(x) - wmax - std::log(s));
    if (!derivatives) continue;
    q /= s;
    e.grad(x) += nu(x);
    e.grad -= nu(x) * q;
    e.hess.noalias() -= nu(x) * Eigen::MatrixXd(q.asDiagonal());
    e.hess.noalias() += nu(x) * q * q.transpose();
  }
  return e;
}

}  // namespace

void validate_chain(const Eigen::MatrixXd& P) {
  if (P.rows() == 0 || P.rows() != P.cols()) throw ConfigError("transition matrix must be square and nonempty");
  for (Eigen::Index x = 0; x < P.rows(); ++x) {
    if ((P.row(x).array() < 0.0).any() || !P.row(x).allFinite())
      throw ConfigError("transition matrix has a negative or non-finite entry in row " + std::to_string(x));
    if (std::abs(P.row(x).sum() - 1.0) > kStochasticTol)
      throw ConfigError("row " + std::to_string(x) + " of the transition matrix does not sum to 1");
  }
}

void validate_prob(const ProbVector& nu, int n) {
  if (nu.size() != n) throw ConfigError("probability vector has the wrong length");
  if ((nu.array() < 0.0).any() || !nu.allFinite()) throw ConfigError("probability vector has a negative entry");
  if (std::abs(nu.sum() - 1.0) > kStochasticTol) throw ConfigError("probability vector does not sum to 1");
}

FiniteChain::FiniteChain(Eigen::MatrixXd transition, std::optional<ProbVector> invariant)
    : P(std::move(transition)), pi(std::move(invariant)) {
  validate_chain(P);
  if (pi) {
    validate_prob(*pi, size());
    if ((P.transpose() * *pi - *pi).cwiseAbs().maxCoeff() > 1e-10)
      throw ConfigError("supplied distribution is not invariant for the chain");
  }
}

bool is_irreducible(const FiniteChain& chain) {
  for (int x = 0; x < chain.size(); ++x) {
    const auto level = reachable(chain.P, x);
    if (std::any_of(level.begin(), level.end(), [](int l) { return l < 0; })) return false;
  }
  return true;
}

bool is_aperiodic(const FiniteChain& chain) {
  if (!is_irreducible(chain)) return false;
  const auto level = reachable(chain.P, 0);
  int period = 0;
  for (int x = 0; x < chain.size(); ++x)
    for (int y = 0; y < chain.size(); ++y)
      if (chain.P(x, y) > 0.0)
        period = std::gcd(period, std::abs(level[static_cast<std::size_t>(x)] + 1 - level[static_cast<std::size_t>(y)]));
  return period == 1;
}

ProbVector invariant_distribution(const FiniteChain& chain) {
  if (chain.pi) return *chain.pi;
  const int n = chain.size();
  Eigen::MatrixXd A = chain.P.transpose() - Eigen::MatrixXd::Identity(n, n);
  A.row(n - 1).setOnes();
  Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
  b(n - 1) = 1.0;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) throw NumericalError("invariant distribution is not unique");
  return lu.solve(b);
}

DvResult dv_rate_detail(const ProbVector& nu, const FiniteChain& chain, double tolerance) {
  const int n = chain.size();
  validate_prob(nu, n);
  if (!is_irreducible(chain)) throw ConfigError("dv_rate requires an irreducible chain");
  DvResult r;
  if (n == 1) return r;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(n);
  DvEval e = dv_eval(nu, chain.P, w, true);
  constexpr int kMaxIterations = 2000;
  for (r.iterations = 0; r.iterations < kMaxIterations; ++r.iterations) {
    // w(0) is pinned, so only the trailing n - 1 coordinates move.
    const Eigen::VectorXd g = e.grad.tail(n - 1);
    r.gradient_norm = g.norm();
    if (r.gradient_norm <= tolerance) break;
    const Eigen::MatrixXd H = -e.hess.bottomRightCorner(n - 1, n - 1) +
                              r.gradient_norm * Eigen::MatrixXd::Identity(n - 1, n - 1);
    const Eigen::VectorXd s = H.ldlt().solve(g);
    const double slope = g.dot(s);
    // Armijo backtracking. Close to the optimum the objective is flat to rounding, so a
    // step that keeps the value within rounding and shrinks the gradient also counts.
    const double flat = 1e-13 * (1.0 + std::abs(e.value));
    double t = 1.0;
    Eigen::VectorXd trial = w;
    bool accepted = false;
    DvEval next;
    for (int k = 0; k < 60 && !accepted; ++k, t *= 0.5) {
      trial.tail(n - 1) = w.tail(n - 1) + t * s;
      next = dv_eval(nu, chain.P, trial, true);
      accepted = next.value >= e.value + 1e-4 * t * slope ||
                 (next.value >= e.value - flat && next.grad.tail(n - 1).norm() < 0.5 * r.gradient_norm);
    }
    if (!accepted) break;
    w = trial;
    e = std::move(next);
  }
  r.value = e.value;
  r.gradient_norm = e.grad.tail(n - 1).norm();
  if (r.gradient_norm > tolerance) throw NonConvergenceError("dv_rate", r.gradient_norm);
  return r;
}

double dv_rate(const ProbVector& nu, const FiniteChain& chain) { return dv_rate_detail(nu, chain).value; }

double scgf(const FiniteChain& chain, const Eigen::VectorXd& V) {
  if (V.size() != chain.size()) throw ConfigError("potential has the wrong length");
  return std::log(spectral_radius(chain.P * V.array().exp().matrix().asDiagonal()));
}

ScgfResult scgf_and_legendre(const FiniteChain& chain, const Eigen::VectorXd& V, double mean) {
  ScgfResult r;
  r.scgf = scgf(chain, V);
  const double lo = V.minCoeff(), hi = V.maxCoeff();
  if (mean < lo - 1e-12 || mean > hi + 1e-12) {
    r.rate = std::numeric_limits<double>::infinity();
    r.theta = std::numeric_limits<double>::quiet_NaN();
    return r;
  }
  const auto g = [&](double th) { return th * mean - scgf(chain, th * V); };
  // Concave in theta: walk uphill with doubling steps to bracket the maximum.
  constexpr double kThetaCap = 1e4;
  const double dir = g(1e-3) >= g(-1e-3) ? 1.0 : -1.0;
  double prev = 0.0, a = 0.0, ga = g(0.0), b = dir, gb = g(b);
  while (gb > ga && std::abs(b) < kThetaCap) {
    prev = a;
    a = b;
    ga = gb;
    b *= 2.0;
    gb = g(b);
  }
  double left = std::min(prev, b), right = std::max(prev, b);
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = right - phi * (right - left), d = left + phi * (right - left);
  double gc = g(c), gd = g(d);
  while (right - left > 1e-11 * std::max(1.0, std::abs(right))) {
    if (gc >= gd) {
      right = d;
      d = c;
      gd = gc;
      c = right - phi * (right - left);
      gc = g(c);
    } else {
      left = c;
      c = d;
      gc = gd;
      d = left + phi * (right - left);
      gd = g(d);
    }
  }
  r.theta = 0.5 * (left + right);
  r.rate = std::max(0.0, g(r.theta));
  return r;
}

HittingMomentExact exp_hitting_moment_exact(const FiniteChain& chain, const std::vector<int>& K, double lambda,
                                            int x) {
  const int n = chain.size();
  if (K.empty()) throw ConfigError("target set K must be nonempty");
  for (int k : K)
    if (k < 0 || k >= n) throw ConfigError("target state out of range");
  if (x < 0 || x >= n) throw ConfigError("start state out of range");
  std::vector<int> outside;
  for (int y = 0; y < n; ++y)
    if (!member(K, y)) outside.push_back(y);
  const auto m = static_cast<Eigen::Index>(outside.size());
  Eigen::MatrixXd Q(m, m);
  Eigen::VectorXd exit(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    exit(i) = 0.0;
    for (int y = 0; y < n; ++y)
      if (member(K, y)) exit(i) += chain.P(outside[static_cast<std::size_t>(i)], y);
    for (Eigen::Index j = 0; j < m; ++j)
      Q(i, j) = chain.P(outside[static_cast<std::size_t>(i)], outside[static_cast<std::size_t>(j)]);
  }
  HittingMomentExact h;
  h.spectral_radius = spectral_radius(Q);
  if (member(K, x)) {
    h.value = 1.0;
    return h;
  }
  const double growth = std::exp(lambda);
  if (growth * h.spectral_radius >= 1.0) {
    h.divergent = true;
    h.value = std::numeric_limits<double>::infinity();
    return h;
  }
  const Eigen::MatrixXd A = Eigen::MatrixXd::Identity(m, m) - growth * Q;
  Eigen::FullPivLU<Eigen::MatrixXd> lu(A);
  if (!lu.isInvertible()) {
    h.divergent = true;
    h.value = std::numeric_limits<double>::infinity();
    return h;
  }
  const Eigen::VectorXd sol = lu.solve(growth * exit);
  const auto pos = std::find(outside.begin(), outside.end(), x) - outside.begin();
  h.value = sol(pos);
  return h;
}

double divergence_threshold(const FiniteChain& chain, const std::vector<int>& K) {
  int outside = -1;
  for (int y = 0; y < chain.size() && outside < 0; ++y)
    if (!member(K, y)) outside = y;
  if (outside < 0) return std::numeric_limits<double>::infinity();
  const double rho = exp_hitting_moment_exact(chain, K, 0.0, outside).spectral_radius;
  return rho > 0.0 ? -std::log(rho) : std::numeric_limits<double>::infinity();
}

double total_variation(const ProbVector& nu1, const ProbVector& nu2) {
  if (nu1.size() != nu2.size()) throw ConfigError("probability vectors differ in length");
  return (nu1 - nu2).cwiseAbs().sum();
}

int chain_step(const FiniteChain& chain, int x, double uniform) {
  double c = 0.0;
  int last = x;
  for (int y = 0; y < chain.size(); ++y) {
    if (chain.P(x, y) <= 0.0) continue;
    c += chain.P(x, y);
    last = y;
    if (uniform < c) return y;
  }
  return last;
}

std::vector<long> sample_hitting_times(const FiniteChain& chain, const std::vector<int>& K, int x, std::size_t runs,
                                       std::uint64_t seed, long max_steps) {
  std::vector<long> taus(runs, -1);
  const auto count = static_cast<long long>(runs);
#pragma omp parallel for schedule(dynamic, 256)
  for (long long i = 0; i < count; ++i) {
    const RngStream rng{seed, static_cast<std::uint64_t>(i)};
    int state = x;
    for (long t = 0; t <= max_steps; ++t) {
      if (member(K, state)) {
        taus[static_cast<std::size_t>(i)] = t;
        break;
      }
      state = chain_step(chain, state, counter_uniform(rng, static_cast<std::uint64_t>(t), 0));
    }
  }
  return taus;
}

TailFit fit_hitting_tail(const std::vector<long>& taus, long t_min, long t_max) {
  if (taus.empty() || t_max <= t_min) throw ConfigError("tail fit needs samples and t_max > t_min");
  std::vector<long> sorted;
  for (long t : taus) sorted.push_back(t < 0 ? std::numeric_limits<long>::max() : t);
  std::sort(sorted.begin(), sorted.end());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int n = 0;
  for (long t = t_min; t <= t_max; ++t) {
    const auto above = sorted.end() - std::upper_bound(sorted.begin(), sorted.end(), t);
    if (above == 0) break;
    const double y = std::log(static_cast<double>(above) / static_cast<double>(sorted.size()));
    sx += static_cast<double>(t);
    sy += y;
    sxx += static_cast<double>(t) * static_cast<double>(t);
    sxy += static_cast<double>(t) * y;
    ++n;
  }
  if (n < 2) throw NumericalError("too few surviving samples for a tail fit");
  TailFit f;
  f.slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  f.threshold = -f.slope;
  f.t_min = t_min;
  f.t_max = t_min + n - 1;
  return f;
}

std::vector<ProbVector> simplex_grid(int n, int resolution) {
  if (n < 1 || resolution < 1) throw ConfigError("simplex grid needs n >= 1 and resolution >= 1");
  std::vector<ProbVector> out;
  std::vector<int> c(static_cast<std::size_t>(n), 0);
  const std::function<void(int, int)> rec = [&](int i, int left) {
    if (i == n - 1) {
      c[static_cast<std::size_t>(i)] = left;
      ProbVector p(n);
      for (int j = 0; j < n; ++j) p(j) = static_cast<double>(c[static_cast<std::size_t>(j)]) / resolution;
      out.push_back(std::move(p));
      return;
    }
    for (int k = 0; k <= left; ++k) {
      c[static_cast<std::size_t>(i)] = k;
      rec(i + 1, left - k);
    }
  };
  rec(0, resolution);
  return out;
}

ProbVector occupation_vector(const FiniteChain& chain, int start, long T, std::uint64_t seed, std::uint64_t run) {
  const RngStream rng{seed, run};
  ProbVector L = ProbVector::Zero(chain.size());
  int x = start;
  for (long t = 0; t < T; ++t) {
    x = chain_step(chain, x, counter_uniform(rng, static_cast<std::uint64_t>(t), 0));
    L(x) += 1.0;
  }
  return L / static_cast<double>(T);
}

LdpReport empirical_ldp_check(const FiniteChain& chain, const LdpTarget& target, long T, std::size_t runs,
                              std::uint64_t seed, int resolution, int start) {
  if (!is_aperiodic(chain)) throw ConfigError("empirical LDP check needs an irreducible aperiodic chain");
  if (T < 1 || runs < 1) throw ConfigError("need T >= 1 and at least one run");
  LdpReport r;
  r.T = T;
  r.runs = runs;
  long long hits = 0;
  const auto count = static_cast<long long>(runs);
#pragma omp parallel for reduction(+ : hits) schedule(dynamic, 256)
  for (long long i = 0; i < count; ++i)
    if (target.contains(occupation_vector(chain, start, T, seed, static_cast<std::uint64_t>(i)))) ++hits;
  r.hits = static_cast<std::size_t>(hits);
  r.fraction = static_cast<double>(hits) / static_cast<double>(runs);
  r.zero_hits = hits == 0;
  r.empirical_rate = r.zero_hits ? std::log(static_cast<double>(runs)) / static_cast<double>(T)
                                 : -std::log(r.fraction) / static_cast<double>(T);

  r.grid_inf_rate = std::numeric_limits<double>::infinity();
  for (const auto& p : simplex_grid(chain.size(), resolution)) {
    if (!target.contains(p)) continue;
    const double j = dv_rate(p, chain);
    if (j < r.grid_inf_rate) {
      r.grid_inf_rate = j;
      r.argmin = p;
    }
  }
  r.ratio = r.empirical_rate / r.grid_inf_rate;
  return r;
}

FiniteChain read_chain_csv(std::istream& in) {
  std::vector<std::vector<double>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
        if (cell.find_first_not_of(" \t\r", used) != std::string::npos) numeric = false;
      } catch (const std::exception&) {
        numeric = false;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue;
      }
      throw ConfigError("non-numeric entry in chain CSV: " + line);
    }
    first = false;
    rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd P(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n)
      throw ConfigError("chain CSV must be a square matrix");
    for (Eigen::Index j = 0; j < n; ++j) P(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return FiniteChain(P);
}

void write_ldp_json(std::ostream& out, const LdpReport& r) {
  nlohmann::json j;
  j["T"] = r.T;
  j["runs"] = r.runs;
  j["hits"] = r.hits;
  j["fraction"] = r.fraction;
  j["empirical_rate"] = r.empirical_rate;
  j["zero_hits"] = r.zero_hits;
  j["grid_inf_rate"] = r.grid_inf_rate;
  j["ratio"] = r.ratio;
  j["argmin"] = std::vector<double>(r.argmin.data(), r.argmin.data() + r.argmin.size());
  out << j.dump(2) << '\n';
}

}  // namespace scbf

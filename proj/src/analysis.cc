#include "nested_hinf/analysis.h"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "nested_hinf/riccati.h"

namespace nested_hinf {
namespace {

void RequireStable(const StateSpace& sys) {
  if (!IsHurwitz(sys.A())) throw std::domain_error("unstable system");
}

double SigmaMaxAt(const StateSpace& sys, double omega) {
  return MaxSingularValue(EvalFreq(sys, omega));
}

// Frequencies where σ̄ is likely to peak: ω = 0, the natural frequencies of
// A, and a log grid covering them.
std::vector<double> InitialGrid(const StateSpace& sys, int points) {
  std::vector<double> grid{0.0};
  const ComplexVector eig = sys.A().eigenvalues();
  double lo = INFINITY, hi = 0.0;
  for (Eigen::Index i = 0; i < eig.size(); ++i) {
    const double mag = std::abs(eig(i));
    if (mag > 0) {
      lo = std::min(lo, mag);
      hi = std::max(hi, mag);
    }
    if (std::abs(eig(i).imag()) > 0) grid.push_back(std::abs(eig(i).imag()));
    if (mag > 0) grid.push_back(mag);
  }
  if (!(hi > 0)) {
    lo = 1.0;
    hi = 1.0;
  }
  const double a = std::log10(lo) - 2.0, b = std::log10(hi) + 2.0;
  for (int i = 0; i < points; ++i) {
    grid.push_back(std::pow(10.0, a + (b - a) * i / (points - 1)));
  }
  return grid;
}

Matrix BoundedRealHamiltonian(const StateSpace& sys, double gamma) {
  const Matrix& A = sys.A();
  const Matrix& B = sys.B();
  const Matrix& C = sys.C();
  const Matrix& D = sys.D();
  const Eigen::Index n = A.rows();
  Matrix H(2 * n, 2 * n);
  if (MaxAbs(D) == 0.0) {
    H << A, B * B.transpose() / (gamma * gamma), -C.transpose() * C,
        -A.transpose();
    return H;
  }
  const Matrix R =
      gamma * gamma * Matrix::Identity(D.cols(), D.cols()) - D.transpose() * D;
  const Eigen::LLT<Matrix> llt(R);
  const Matrix Ah = A + B * llt.solve(D.transpose() * C);
  const Matrix Qh = C.transpose() *
                    (Matrix::Identity(D.rows(), D.rows()) +
                     D * llt.solve(D.transpose())) *
                    C;
  H << Ah, B * llt.solve(B.transpose()), -Qh, -Ah.transpose();
  return H;
}

}  // namespace

double HinfNorm(const StateSpace& sys, double rel_tol) {
  const double sigma_d = MaxSingularValue(sys.D());
  if (sys.num_states() == 0) return sigma_d;
  RequireStable(sys);
  if (sys.num_inputs() == 0 || sys.num_outputs() == 0) return 0.0;

  double lower = sigma_d;
  for (double w : InitialGrid(sys, 100)) lower = std::max(lower, SigmaMaxAt(sys, w));
  if (lower == 0.0) return 0.0;

  for (int iter = 0; iter < 200; ++iter) {
    const double gamma = lower * (1.0 + 2.0 * rel_tol);
    const Matrix H = BoundedRealHamiltonian(sys, gamma);
    const ComplexVector eig = H.eigenvalues();
    std::vector<double> crossings;
    for (Eigen::Index i = 0; i < eig.size(); ++i) {
      if (std::abs(eig(i).real()) <= 1e-6 * (1.0 + std::abs(eig(i)))) {
        crossings.push_back(std::abs(eig(i).imag()));
      }
    }
    double candidate = lower;
    if (!crossings.empty()) {
      std::sort(crossings.begin(), crossings.end());
      for (std::size_t i = 0; i < crossings.size(); ++i) {
        candidate = std::max(candidate, SigmaMaxAt(sys, crossings[i]));
        if (i + 1 < crossings.size()) {
          const double mid = 0.5 * (crossings[i] + crossings[i + 1]);
          candidate = std::max(candidate, SigmaMaxAt(sys, mid));
        }
      }
    }
    if (candidate < gamma) {
      // No verified crossing at γ: the norm lies in [lower, γ].
      lower = std::max(lower, candidate);
      return 0.5 * (lower + gamma);
    }
    lower = candidate;
  }
  return lower;
}

double H2Norm(const StateSpace& sys) {
  if (MaxAbs(sys.D()) != 0.0) {
    throw std::domain_error("H2 norm requires D = 0");
  }
  if (sys.num_states() == 0) return 0.0;
  RequireStable(sys);
  const Matrix Lo =
      SolveLyapunov(sys.A(), sys.C().transpose() * sys.C());
  const double trace = (sys.B().transpose() * Lo * sys.B()).trace();
  return std::sqrt(std::max(0.0, trace));
}

EntropyResult Entropy(const StateSpace& sys, double gamma) {
  if (!(gamma > 0)) throw std::invalid_argument("entropy: gamma must be > 0");
  if (MaxAbs(sys.D()) != 0.0) {
    throw std::domain_error("entropy requires D = 0");
  }
  EntropyResult result{0.0, EntropyMethod::kRiccati, gamma};
  if (sys.num_states() == 0) return result;
  RequireStable(sys);
  const Matrix& B = sys.B();
  const Matrix& C = sys.C();
  const Hamiltonian H(sys.A(), B * B.transpose() / (gamma * gamma),
                      C.transpose() * C);
  RiccatiOutcome outcome = TrySolveRiccati(H);
  if (!outcome) {
    throw InfiniteEntropyError("infinite entropy: " + outcome.failure);
  }
  result.value = (B.transpose() * outcome.solution->X * B).trace();
  return result;
}

double EntropyIntegrand(const StateSpace& sys, double gamma, double omega) {
  const ComplexMatrix G = EvalFreq(sys, omega);
  if (G.size() == 0) return 0.0;
  Eigen::JacobiSVD<ComplexMatrix> svd(G);
  double sum = 0.0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
    const double ratio = svd.singularValues()(i) / gamma;
    if (ratio >= 1.0) {
      throw InfiniteEntropyError("infinite entropy: σ̄(G(jω)) >= γ");
    }
    sum -= std::log1p(-ratio * ratio);
  }
  return sum;
}

namespace {

template <typename F>
double AdaptiveSimpson(const F& f, double a, double b, double fa, double fm,
                       double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) {
    return left + right + delta / 15.0;
  }
  return AdaptiveSimpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         AdaptiveSimpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

template <typename F>
double IntegrateWithPeaks(const F& g, double theta_max, double tol) {
  constexpr int kCoarse = 257;
  std::vector<double> theta(kCoarse), value(kCoarse);
  for (int i = 0; i < kCoarse; ++i) {
    theta[i] = theta_max * i / (kCoarse - 1);
    value[i] = g(theta[i]);
  }
  std::vector<double> breaks{0.0};
  for (int i = 1; i + 1 < kCoarse; ++i) {
    if (value[i] > value[i - 1] && value[i] >= value[i + 1]) {
      breaks.push_back(theta[i]);
    }
  }
  breaks.push_back(theta_max);
  double total = 0.0;
  const double span = theta_max;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    const double a = breaks[i], b = breaks[i + 1];
    const double fa = g(a), fb = g(b), fm = g(0.5 * (a + b));
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    total += AdaptiveSimpson(g, a, b, fa, fm, fb, whole,
                             tol * (b - a) / span, 50);
  }
  return total;
}

}  // namespace

double EntropyQuadrature(const StateSpace& sys, double gamma,
                         const QuadratureOptions& options) {
  if (!(gamma > 0)) throw std::invalid_argument("entropy: gamma must be > 0");
  if (MaxAbs(sys.D()) != 0.0) {
    throw std::domain_error("entropy requires D = 0");
  }
  if (sys.num_states() == 0) return 0.0;
  RequireStable(sys);

  const double norm_a = MaxSingularValue(sys.A());
  const double gain = MaxSingularValue(sys.B()) * MaxSingularValue(sys.C());
  if (gain == 0.0) return 0.0;
  const double rank = static_cast<double>(
      std::min(sys.num_inputs(), sys.num_outputs()));

  // Beyond Ω the integrand is below rank·s²/(γ² - s²) with
  // s = gain/(ω - ‖A‖); with s(Ω) <= γ/2 the tail of the value is at most
  // (4/3π)·rank·gain²/(Ω - ‖A‖).
  const double tail_share = 0.5 * options.abs_tol;
  const double omega_max =
      norm_a + std::max({norm_a, 2.0 * gain / gamma,
                         4.0 * rank * gain * gain /
                             (3.0 * std::numbers::pi * tail_share)});

  double w0 = 0.0;
  const ComplexVector eig = sys.A().eigenvalues();
  for (Eigen::Index i = 0; i < eig.size(); ++i) w0 = std::max(w0, std::abs(eig(i)));
  if (!(w0 > 0)) w0 = 1.0;
  const double theta_max = std::atan(omega_max / w0);

  const double factor = gamma * gamma / (2.0 * std::numbers::pi);
  const double tol = tail_share / factor / (options.full_line ? 2.0 : 1.0);
  const auto transformed = [&](double sign) {
    return [&, sign](double theta) {
      const double c = std::cos(theta);
      return EntropyIntegrand(sys, gamma, sign * w0 * std::tan(theta)) * w0 /
             (c * c);
    };
  };
  double integral = 0.0;
  if (options.full_line) {
    integral = IntegrateWithPeaks(transformed(1.0), theta_max, tol) +
               IntegrateWithPeaks(transformed(-1.0), theta_max, tol);
  } else {
    integral = 2.0 * IntegrateWithPeaks(transformed(1.0), theta_max, 0.5 * tol);
  }
  return factor * integral;
}

bool BoundedRealCheck(const StateSpace& sys, double gamma, double tol) {
  if (!IsHurwitz(sys.A())) return false;
  const double limit = gamma * (1.0 - tol);
  return HinfNorm(sys, std::max(1e-12, 0.1 * tol)) < limit;
}

}  // namespace nested_hinf

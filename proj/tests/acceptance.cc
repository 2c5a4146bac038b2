// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on failure.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "nested_hinf/analysis.h"
#include "nested_hinf/pipeline.h"
#include "nested_hinf/plantgen.h"
#include "nested_hinf/verify.h"
#include "oracles.h"

namespace nh = nested_hinf;

namespace {

struct Synthesis {
  nh::StructuredPlant sp;
  nh::StructuredSolution sol;
  double gamma = 0.0;
  std::string label;
};

// Successful structured syntheses of criteria 1 and 2, audited by 3-5.
std::vector<Synthesis> g_runs;

struct Verdict {
  bool pass = false;
  std::string detail;
};

char Buf[512];

template <typename... A>
std::string Fmt(const char* f, A... a) {
  std::snprintf(Buf, sizeof Buf, f, a...);
  return Buf;
}

double Seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

struct TrialOutcome {
  bool converged = false;
  int iterations = 0;
  double final_step = INFINITY;
};

TrialOutcome RunTrial(int n, int trial, bool stable) {
  nh::GenSpec spec;
  spec.n = n;
  spec.seed = nh::TrialSeed(0, n, trial);
  spec.stable = stable;
  TrialOutcome out;
  try {
    const nh::StructuredPlant sp = nh::RandomStructuredPlant(spec);
    const nh::StructuredGammaSearch g = nh::GammaOptInf(sp, 1e-2);
    const double gamma = 2.0 * g.search.gamma;
    nh::ItsOptions o;
    o.allow_escalation = !stable;
    const nh::ItsResult r = nh::SynthesizeStructured(sp, gamma, o, g.central.gamma);
    if (!r.ok()) return out;
    out.converged = true;
    out.final_step = r.trace.step_norms.empty() ? 0.0 : r.trace.step_norms.back();
    // After escalation every continuation stage counts.
    out.iterations = r.trace.iterations;
    if (r.escalated) {
      out.iterations = 0;
      for (const auto& s : r.stages) out.iterations += s.result.trace.iterations;
    }
    g_runs.push_back({sp, *r.solution, gamma,
                      Fmt("n=%d trial=%d%s", n, trial, stable ? "" : " unstable")});
  } catch (const std::exception&) {
  }
  return out;
}

Verdict Criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const std::vector<int> sizes{4, 8, 12, 16, 20};
  int good = 0, total = 0;
  std::vector<double> mean_it;
  for (int n : sizes) {
    double sum = 0;
    int count = 0;
    for (int t = 0; t < 20; ++t) {
      const TrialOutcome o = RunTrial(n, t, true);
      ++total;
      if (o.converged && o.final_step < 1e-10 && o.iterations <= 15) ++good;
      if (o.converged) {
        sum += o.iterations;
        ++count;
      }
    }
    mean_it.push_back(count ? sum / count : INFINITY);
  }
  // Least-squares slope of mean iterations against n.
  const double nbar = 12.0;
  double num = 0, den = 0;
  const double ybar = std::accumulate(mean_it.begin(), mean_it.end(), 0.0) / mean_it.size();
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    num += (sizes[i] - nbar) * (mean_it[i] - ybar);
    den += (sizes[i] - nbar) * (sizes[i] - nbar);
  }
  const double slope = num / den;
  const double rate = double(good) / total;
  std::string means;
  for (std::size_t i = 0; i < sizes.size(); ++i) means += Fmt(" n%d:%.1f", sizes[i], mean_it[i]);
  return {rate >= 0.95 && std::abs(slope) < 0.2,
          Fmt("%d/%d within 15 iterations, step<1e-10; mean iterations", good, total) + means +
              Fmt("; slope %.3f/state; %.0fs", slope, Seconds(t0))};
}

Verdict Criterion2() {
  const auto t0 = std::chrono::steady_clock::now();
  int good = 0, worst = 0;
  for (int t = 0; t < 20; ++t) {
    const TrialOutcome o = RunTrial(8, t, false);
    if (o.converged && o.iterations <= 200) {
      ++good;
      worst = std::max(worst, o.iterations);
    }
  }
  return {good >= 18, Fmt("%d/20 converged within 200 iterations (worst %d); %.0fs", good,
                          worst, Seconds(t0))};
}

Verdict Criterion3() {
  int bad = 0;
  std::string first;
  for (const Synthesis& s : g_runs) {
    const nh::StateSpace cl = nh::CloseLoop(s.sp.plant, nh::BuildKme(s.sp, s.sol));
    const bool ok = nh::IsHurwitz(cl.A()) && nh::HinfNorm(cl) < s.gamma;
    if (!ok && bad++ == 0) first = s.label;
  }
  return {bad == 0 && !g_runs.empty(),
          Fmt("%d violations over %zu syntheses", bad, g_runs.size()) +
              (first.empty() ? "" : " (first: " + first + ")")};
}

Verdict Criterion4() {
  int bad = 0;
  double worst = 0;
  nh::Philox rng(4);
  for (const Synthesis& s : g_runs) {
    const nh::StateSpace k = nh::BuildKme(s.sp, s.sol);
    const nh::BlockStructure& st = s.sp.structure;
    double peak = 0;
    for (int i = 0; i < 50; ++i) {
      const double w = std::pow(10.0, -3.0 + 6.0 * rng.Uniform());
      peak = std::max(peak, nh::EvalFreq(k, w)
                                .block(0, st.k.first, st.m.first, st.k.second)
                                .norm());
    }
    worst = std::max(worst, peak);
    bad += !(peak < 1e-8);
  }
  return {bad == 0 && !g_runs.empty(),
          Fmt("%d violations over %zu syntheses, largest |K12| %.1e", bad, g_runs.size(), worst)};
}

Verdict Criterion5() {
  int bad = 0;
  std::string first;
  for (const Synthesis& s : g_runs) {
    const nh::Lemma3Report r = nh::Lemma3Verify(s.sp, s.sol);
    if (!r.passed && bad++ == 0) {
      first = s.label + ": " + (r.failures.empty() ? "" : r.failures.front());
    }
  }
  return {bad == 0 && !g_runs.empty(),
          Fmt("%d failures over %zu syntheses", bad, g_runs.size()) +
              (first.empty() ? "" : " (first " + first + ")")};
}

Verdict Criterion6() {
  const double gamma = 1e12;
  int bad = 0;
  double worst_k = 0, worst_e = 0;
  for (int i = 0; i < 10; ++i) {
    nh::GenSpec spec;
    spec.n = 4 + 2 * (i % 5);
    spec.seed = 600 + i;
    const nh::StructuredPlant sp = nh::RandomStructuredPlant(spec);
    const nh::DgkfResult d = nh::DgkfExists(sp.plant, gamma);
    if (!d.feasible) {
      ++bad;
      continue;
    }
    const nh::ItsResult r = nh::ItsIterate(sp, *d.solution, d.solution->Y);
    if (!r.ok()) {
      ++bad;
      continue;
    }
    const nh::StateSpace kme = nh::BuildKme(sp, *r.solution);
    const nh::StateSpace krn = nh::BuildKrn(sp, *r.solution);
    const auto rel = [](const nh::Matrix& a, const nh::Matrix& b) {
      return (a - b).norm() / std::max(1e-300, b.norm());
    };
    const double dk = std::max({rel(kme.A(), krn.A()), rel(kme.B(), krn.B()),
                                rel(kme.C(), krn.C())});
    const nh::StateSpace cl = nh::CloseLoop(sp.plant, kme);
    const double h2 = nh::H2Norm(cl);
    const double de = std::abs(nh::Entropy(cl, gamma).value - h2 * h2) / (h2 * h2);
    worst_k = std::max(worst_k, dk);
    worst_e = std::max(worst_e, de);
    bad += !(dk < 1e-5 && de < 1e-5);
  }
  return {bad == 0, Fmt("%d/10 failures; max rel |Kme-Krn| %.1e, max rel |entropy-H2^2| %.1e",
                        bad, worst_k, worst_e)};
}

Verdict Criterion7() {
  int bad = 0;
  double worst = 0, worst_scalar = 0;
  for (int i = 0; i < 20; ++i) {
    const int n = 1 + i % 10;
    const nh::StateSpace raw = oracle::RandomStable(700 + i, n, 1 + i % 3, 1 + (i + 1) % 3);
    const nh::StateSpace g(raw.A(), raw.B(), raw.C(),
                           nh::Matrix::Zero(raw.D().rows(), raw.D().cols()));
    const double gamma = 2.0 * nh::HinfNorm(g);
    const double ric = nh::Entropy(g, gamma).value;
    const double quad = nh::EntropyQuadrature(g, gamma);
    const double rel = std::abs(ric - quad) / std::abs(quad);
    worst = std::max(worst, rel);
    bad += !(rel < 1e-6);
  }
  const double triples[10][3] = {{1, 1, 2},   {2, 1, 1},    {0.5, 0.3, 1}, {3, 5, 2},
                                 {1, 0.1, 10}, {4, 2, 0.6}, {0.2, 0.1, 0.6}, {1, 1, 1.01},
                                 {10, 3, 1},  {0.7, 2, 5}};
  for (const auto& t : triples) {
    const double a = t[0], b = t[1], gamma = t[2];
    const nh::StateSpace g(nh::Matrix::Constant(1, 1, -a), nh::Matrix::Constant(1, 1, b),
                           nh::Matrix::Constant(1, 1, 1.0), nh::Matrix::Zero(1, 1));
    const double exact = gamma * gamma * (a - std::sqrt(a * a - b * b / (gamma * gamma)));
    const double rel = std::abs(nh::Entropy(g, gamma).value - exact) / exact;
    worst_scalar = std::max(worst_scalar, rel);
    bad += !(rel < 1e-8);
  }
  return {bad == 0, Fmt("%d failures; Riccati vs quadrature max rel %.1e, scalar max rel %.1e",
                        bad, worst, worst_scalar)};
}

Verdict Criterion8() {
  int bad = 0;
  double worst_k = 0, worst_g = 0;
  for (int i = 0; i < 10; ++i) {
    nh::GenSpec spec;
    spec.n = 4 + 2 * (i % 3);
    spec.seed = 800 + i;
    const nh::DecoupledPlant dp = nh::RandomDecoupledPlant(spec);
    const double g1 = nh::GammaCenInf(dp.first, 1e-8).gamma;
    const double g2 = nh::GammaCenInf(dp.second, 1e-8).gamma;
    const double expected = std::max(g1, g2);
    const double gamma = 2.0 * expected;
    nh::ItsOptions o;
    o.allow_escalation = true;
    const nh::ItsResult r = nh::SynthesizeStructured(dp.plant, gamma, o);
    if (!r.ok()) {
      ++bad;
      continue;
    }
    const nh::StateSpace kme = nh::BuildKme(dp.plant, *r.solution);
    const nh::StateSpace k1 = nh::BuildKcen(dp.first, *nh::DgkfExists(dp.first, gamma).solution);
    const nh::StateSpace k2 = nh::BuildKcen(dp.second, *nh::DgkfExists(dp.second, gamma).solution);
    const nh::BlockStructure& s = dp.plant.structure;
    double dk = 0;
    for (double w : {0.0, 0.01, 0.1, 0.5, 1.0, 3.0, 10.0, 100.0}) {
      const nh::ComplexMatrix K = nh::EvalFreq(kme, w);
      dk = std::max({dk, (K.topLeftCorner(s.m.first, s.k.first) - nh::EvalFreq(k1, w)).norm(),
                     (K.bottomRightCorner(s.m.second, s.k.second) - nh::EvalFreq(k2, w)).norm()});
    }
    double dg = INFINITY;
    try {
      dg = std::abs(nh::GammaOptInf(dp.plant, 1e-5).search.gamma - expected) / expected;
    } catch (const std::exception&) {
    }
    worst_k = std::max(worst_k, dk);
    worst_g = std::max(worst_g, dg);
    bad += !(dk < 1e-6 && dg < 1e-4);
  }
  return {bad == 0, Fmt("%d/10 failures; max block mismatch %.1e, max rel gamma_opt error %.1e",
                        bad, worst_k, worst_g)};
}

Verdict Criterion9() {
  int instances = 0, good = 0, skipped = 0;
  std::string notes;
  for (std::uint64_t seed = 900; seed < 1000 && instances < 10; ++seed) {
    nh::GenSpec spec;
    spec.n = 4 + 2 * (seed % 2);
    spec.seed = seed;
    try {
      const nh::StructuredPlant sp = nh::RandomStructuredPlant(spec);
      const double gcen = nh::GammaCenInf(sp.plant, 1e-6).gamma;
      bool found = false;
      for (double factor : {2.0, 4.0, 8.0, 16.0}) {
        const double gamma = factor * gcen;
        nh::ItsOptions o;
        o.allow_escalation = true;
        const nh::ItsResult r = nh::SynthesizeStructured(sp, gamma, o, gcen);
        if (!r.ok()) continue;
        const nh::StateSpace kcen = nh::BuildKcen(sp.plant, r.solution->central);
        const nh::StateSpace kproj =
            nh::ProjectToStructure(kcen, sp.structure.m, sp.structure.k);
        const nh::StateSpace clp = nh::CloseLoop(sp.plant, kproj);
        if (!nh::IsHurwitz(clp.A()) || nh::HinfNorm(clp) >= gamma) continue;
        found = true;
        ++instances;
        const nh::YoulaTriple t = nh::YoulaParams(sp);
        const nh::StateSpace cl = nh::CloseLoop(sp.plant, nh::BuildKme(sp, *r.solution));
        const nh::OptimalityReport me = nh::OptimalityCheck(t, cl, gamma, sp.structure);
        nh::OptimalityReport pr;
        try {
          pr = nh::OptimalityCheck(t, clp, gamma, sp.structure);
        } catch (const nh::GammaTooSmallError&) {
          pr.passed = true;  // undecided: not counted as a detected failure
        }
        if (me.passed && !pr.passed) ++good;
        break;
      }
      skipped += !found;
    } catch (const std::exception&) {
      ++skipped;
    }
  }
  return {instances == 10 && good >= 9,
          Fmt("%d/%d instances certified (K_me passes, projection fails); %d seeds without an "
              "admissible projection",
              good, instances, skipped)};
}

Verdict Criterion10() {
  const auto t0 = std::chrono::steady_clock::now();
  bool ok = true;
  std::string detail = "median gamma_cen:";
  for (int n : {4, 8, 12, 16, 20}) {
    std::vector<double> g;
    for (int t = 0; t < 100; ++t) {
      nh::GenSpec spec;
      spec.n = n;
      spec.seed = nh::TrialSeed(0, n, t);
      try {
        g.push_back(nh::GammaCenInf(nh::RandomStructuredPlant(spec).plant, 1e-3).gamma);
      } catch (const std::exception&) {
        g.push_back(INFINITY);
      }
    }
    std::nth_element(g.begin(), g.begin() + 50, g.end());
    const double hi = g[50];
    std::nth_element(g.begin(), g.begin() + 49, g.end());
    const double median = 0.5 * (g[49] + hi);
    ok = ok && median >= 1.5 && median <= 6.0;
    detail += Fmt(" n%d:%.2f", n, median);
  }
  return {ok, detail + Fmt("; %.0fs", Seconds(t0))};
}

}  // namespace

int main() {
  const std::vector<std::function<Verdict()>> criteria{
      Criterion1, Criterion2, Criterion3, Criterion4, Criterion5,
      Criterion6, Criterion7, Criterion8, Criterion9, Criterion10};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("%s criterion %zu: %s\n", v.pass ? "PASS" : "FAIL", i + 1, v.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}

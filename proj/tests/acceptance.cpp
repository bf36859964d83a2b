// One PASS/FAIL line per acceptance criterion, each followed by the measured
// values of the records behind it. Exit status 1 if any criterion fails.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "cdistab/harness.hpp"

using namespace cdistab;

namespace {

constexpr std::uint64_t kSeed = 20240611;

struct Criterion {
  int id;
  std::string title;
  std::vector<CheckRecord> records;
  bool pass() const {
    for (const auto& r : records) {
      if (r.mandatory && !r.pass) return false;
    }
    return !records.empty();
  }
};

std::vector<CheckRecord> pick(const SuiteResult& res, const std::string& prefix) {
  std::vector<CheckRecord> out;
  for (const auto& c : res.checks) {
    if (c.name.rfind(prefix, 0) == 0) out.push_back(c);
  }
  return out;
}

std::vector<CheckRecord> concat(std::vector<CheckRecord> a, const std::vector<CheckRecord>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

}  // namespace

int main() {
  RunConfig config;
  config.seed = kSeed;
  config.workers = std::max(1u, std::thread::hardware_concurrency());
  const VerifyContext ctx(config);

  const std::vector<SaturationFn> builtins{SaturationFn::standard(), SaturationFn::tanh(),
                                           SaturationFn::arctan().normalized()};
  std::vector<Criterion> crit;
  auto timed = [](const char* what, auto&& fn) {
    const auto t0 = std::chrono::steady_clock::now();
    auto out = fn();
    const double s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::fprintf(stderr, "[%6.1fs] %s\n", s, what);
    return out;
  };

  {
    Criterion c{1, "saturation axioms", {}};
    for (const auto& s : builtins) c.records.push_back(check_axioms(s));
    crit.push_back(c);
  }
  {
    Criterion c{2, "modified saturation slope, formulas, S_inf", {}};
    c.records.push_back(check_slope_at_zero(ctx.s(), 1e-8));
    c.records.push_back(check_formula_agreement(ctx.s(), 1e-8));
    c.records.push_back(report_s_inf(ctx.s()));
    crit.push_back(c);
  }
  {
    Criterion c{3, "scaling bound", {}};
    for (const auto& s : builtins) c.records.push_back(check_scaling(ModifiedSaturation(s)));
    crit.push_back(c);
  }

  const SuiteResult lyap = timed("lyapunov-T0", [&] { return run_suite(ctx, "lyapunov-T0"); });
  crit.push_back({4, "averaged field jacobian", pick(lyap, "jacobian")});
  crit.push_back({5, "T0 global decrease",
                  concat(pick(lyap, "monotonicity_gap"), pick(lyap, "decrease.t0"))});

  const SuiteResult equiv = timed("equivalence", [&] { return run_suite(ctx, "equivalence"); });
  crit.push_back({6, "scaling equivalence", pick(equiv, "scaling_equivalence")});
  crit.push_back({7, "coordinate correspondence", pick(equiv, "coordinates")});

  const SuiteResult avg = timed("averaging", [&] { return run_suite(ctx, "averaging"); });
  crit.push_back({8, "averaging", pick(avg, "averaging")});

  const SuiteResult window =
      timed("window-decrease", [&] { return run_suite(ctx, "window-decrease"); });
  crit.push_back({9, "window decrease", window.checks});

  const SuiteResult capture = timed("capture", [&] { return run_suite(ctx, "capture"); });
  crit.push_back({10, "capture", capture.checks});

  const SuiteResult l2 = timed("l2", [&] { return run_suite(ctx, "l2"); });
  crit.push_back({11, "L2 estimate and tail", l2.checks});

  crit.push_back({12, "Hurwitz endgame", check_hurwitz(ctx.s(), {1.0, 0.1, 0.01}, 1e-10)});

  {
    auto rng = ctx.rng(0x484541444u);
    const CheckRecord head = timed("headline", [&] {
      return check_headline(ctx.sigma(), rng, 0.02, 20, 10.0, 2000.0, 1e-4);
    });
    crit.push_back({13, "headline stabilization", {head}});
  }
  crit.push_back({14, "generalizations Fn and DI",
                  concat(pick(lyap, "decrease.fn"), pick(lyap, "decrease.di"))});
  crit.push_back({15, "RK4 order", {check_rk4_order(1.0 / 40)}});

  int failed = 0;
  for (const auto& c : crit) {
    const bool ok = c.pass();
    if (!ok) ++failed;
    std::cout << "criterion " << c.id << ": " << (ok ? "PASS" : "FAIL") << "  " << c.title
              << '\n';
    for (const auto& r : c.records) {
      std::cout << "    " << (r.pass ? "pass" : (r.mandatory ? "FAIL" : "info")) << ' ' << r.name
                << ' ' << r.measured.dump() << '\n';
    }
  }
  std::cout << (crit.size() - failed) << '/' << crit.size() << " criteria pass\n";
  return failed == 0 ? 0 : 1;
}

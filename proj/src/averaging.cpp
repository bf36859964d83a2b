#include "cdistab/averaging.hpp"

#include <algorithm>
#include <fstream>
#include <limits>

#include "cdistab/errors.hpp"
#include "cdistab/integrator.hpp"

namespace cdistab {

Vec2 oscillatory_field(const SaturationFn& sigma, double eps, double t, const Vec2& z) {
  if (!(eps > 0.0)) throw DomainError("oscillatory_field: eps must be positive");
  const Vec2 b = b_eps(t, eps);
  return b * sigma(b.dot(z));
}

Vec2 window_average(const SaturationFn& sigma, double eps, const Vec2& z, double a, double c) {
  return window_average_of([&](double t) { return oscillatory_field(sigma, eps, t, z); }, eps, a, c);
}

double log_log_slope(const std::vector<double>& eps, const std::vector<double>& err) {
  if (eps.size() != err.size() || eps.size() < 2) {
    throw UsageError("log_log_slope: need at least two matching samples");
  }
  const double n = static_cast<double>(eps.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < eps.size(); ++i) {
    const double lx = std::log(eps[i]);
    const double ly = std::log(err[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

AveragingStudy convergence_study(const SaturationFn& sigma, const ModifiedSaturation& s,
                                 const std::vector<Vec2>& z_set, const std::vector<double>& eps_seq,
                                 double a, double c, double threshold) {
  if (eps_seq.size() < 3) throw UsageError("convergence_study: need at least three eps values");
  for (std::size_t i = 1; i < eps_seq.size(); ++i) {
    if (!(eps_seq[i] < eps_seq[i - 1])) {
      throw UsageError("convergence_study: eps sequence must be strictly decreasing");
    }
  }
  if (z_set.empty()) throw UsageError("convergence_study: no test points");

  AveragingStudy st;
  st.points = z_set;
  st.a = a;
  st.c = c;
  st.eps = eps_seq;
  st.threshold = threshold;
  const auto np = z_set.size();
  const auto ne = eps_seq.size();

  const auto rows = parallel_map(np, [&](std::size_t p) {
    std::vector<double> row(ne);
    const Vec2 target = averaged_field(s, z_set[p]);
    for (std::size_t e = 0; e < ne; ++e) {
      row[e] = (window_average(sigma, eps_seq[e], z_set[p], a, c) - target).norm();
    }
    return row;
  });

  st.errors.resize(static_cast<Eigen::Index>(np), static_cast<Eigen::Index>(ne));
  st.monotone = true;
  st.min_slope = std::numeric_limits<double>::infinity();
  for (std::size_t p = 0; p < np; ++p) {
    for (std::size_t e = 0; e < ne; ++e) st.errors(p, e) = rows[p][e];
    for (std::size_t e = 1; e < ne; ++e) {
      if (!(rows[p][e] < rows[p][e - 1])) st.monotone = false;
    }
    st.slopes.push_back(log_log_slope(eps_seq, rows[p]));
    st.min_slope = std::min(st.min_slope, st.slopes.back());
    st.max_error_smallest = std::max(st.max_error_smallest, rows[p].back());
    st.worst_ratio = std::max(st.worst_ratio, rows[p].back() / rows[p].front());
  }
  st.pass = st.min_slope >= 0.8 && st.max_error_smallest <= threshold;
  return st;
}

std::vector<Vec2> multiscale_points(const std::vector<double>& radii, int angles) {
  if (angles < 1) throw UsageError("multiscale_points: need at least one angle");
  std::vector<Vec2> pts;
  for (double r : radii) {
    for (int k = 0; k < angles; ++k) {
      pts.push_back(r * rotation(kTwoPi * k / angles).col(0));
    }
  }
  return pts;
}

void write_study_csv(const AveragingStudy& study, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw UsageError("write_study_csv: cannot open " + path.string());
  out << "zx,zy,eps,err\n";
  for (std::size_t p = 0; p < study.points.size(); ++p) {
    for (std::size_t e = 0; e < study.eps.size(); ++e) {
      out << format_number(study.points[p](0)) << ',' << format_number(study.points[p](1)) << ','
          << format_number(study.eps[e]) << ',' << format_number(study.errors(p, e)) << '\n';
    }
  }
}

}  // namespace cdistab

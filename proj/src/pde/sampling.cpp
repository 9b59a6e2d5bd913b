#include "maskpinn/pde/sampling.hpp"

#include <stdexcept>

#include "maskpinn/rng.hpp"

namespace maskpinn::pde {

namespace {

Eigen::MatrixXd interior(const Problem& problem, int count, Rng& rng) {
  const auto& dom = problem.domain();
  Eigen::MatrixXd pts(2, count);
  for (int p = 0; p < count; ++p) {
    pts(0, p) = rng.uniform(dom[0].lo, dom[0].hi);
    pts(1, p) = rng.uniform(dom[1].lo, dom[1].hi);
  }
  return pts;
}

}  // namespace

SampleSet sample_points(const Problem& problem, const SampleCounts& counts, std::uint64_t seed) {
  if (counts.interior < 1 || counts.initial < 1 || counts.boundary < 1) {
    throw std::invalid_argument("sample counts must be >= 1");
  }
  Rng rng(seed, streams::kSampling);
  const auto& dom = problem.domain();
  SampleSet s;
  s.collocation = interior(problem, counts.interior, rng);

  if (problem.has_time()) {
    s.initial.resize(2, counts.initial);
    s.initial_target.resize(counts.initial);
    for (int p = 0; p < counts.initial; ++p) {
      const double x = rng.uniform(dom[0].lo, dom[0].hi);
      s.initial(0, p) = x;
      s.initial(1, p) = dom[1].lo;
      s.initial_target[p] = problem.initial_value(x);
    }
  }

  if (problem.periodic()) {
    s.periodic = true;
    const int m = counts.boundary;
    s.boundary.resize(2, 2 * m);
    for (int p = 0; p < m; ++p) {
      const double t = rng.uniform(dom[1].lo, dom[1].hi);
      s.boundary(0, p) = dom[0].lo;
      s.boundary(1, p) = t;
      s.boundary(0, m + p) = dom[0].hi;
      s.boundary(1, m + p) = t;
    }
  } else {
    const auto faces = problem.faces();
    const int m = counts.boundary;
    s.boundary.resize(2, static_cast<Eigen::Index>(faces.size()) * m);
    s.boundary_target = Eigen::VectorXd::Zero(s.boundary.cols());
    Eigen::Index col = 0;
    for (const Face& f : faces) {
      const int free_axis = 1 - f.axis;
      for (int p = 0; p < m; ++p, ++col) {
        s.boundary(f.axis, col) = f.value;
        s.boundary(free_axis, col) = rng.uniform(dom[free_axis].lo, dom[free_axis].hi);
      }
    }
  }
  return s;
}

Eigen::MatrixXd probe_points(const Problem& problem, int count, std::uint64_t seed) {
  if (count < 1) throw std::invalid_argument("probe size must be >= 1");
  Rng rng(seed, streams::kProbe);
  return interior(problem, count, rng);
}

}  // namespace maskpinn::pde

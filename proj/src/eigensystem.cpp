// Copyright (c) 2026 the opal authors
//
// SPDX-License-Identifier: Apache-2.0

#include "opal/eigensystem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <tuple>
#include <vector>

#include "eigensystem_impl.hpp"

namespace opal {

// ---------------------------------------------------------------------------
// EigenSystem wrapper

namespace {
const EigenSystemImpl& deref(const std::shared_ptr<const EigenSystemImpl>& p) {
  if (!p)
    throw std::invalid_argument("EigenSystem: empty handle");
  return *p;
}
} // namespace

int EigenSystem::dim() const { return deref(impl_).dim(); }
Domain EigenSystem::domain() const { return deref(impl_).domain(); }
Measure EigenSystem::native_measure() const { return deref(impl_).native_measure(); }
std::size_t EigenSystem::count() const { return deref(impl_).count(); }
std::string EigenSystem::kind() const { return deref(impl_).kind(); }
nlohmann::json EigenSystem::descriptor() const {
  nlohmann::json j = deref(impl_).params();
  j["kind"] = kind();
  j["count"] = count();
  return j;
}

double EigenSystem::eigenvalue(std::size_t j) const {
  if (j >= count())
    throw std::invalid_argument("EigenSystem::eigenvalue: index beyond stored spectrum");
  return deref(impl_).eigenvalue(j);
}

double EigenSystem::eval(std::size_t j, const Point& x) const {
  if (j >= count())
    throw std::invalid_argument("EigenSystem::eval: index beyond stored spectrum");
  return deref(impl_).eval(j, x);
}

const std::string& EigenSystem::label(std::size_t j) const {
  if (j >= count())
    throw std::invalid_argument("EigenSystem::label: index beyond stored spectrum");
  return deref(impl_).label(j);
}

double EigenSystem::head_sum(std::size_t n) const {
  return std::min(deref(impl_).head_sum(n), trace());
}

double EigenSystem::tail_sum(std::size_t n) const {
  return std::max(0.0, trace() - head_sum(n));
}

double EigenSystem::trace() const { return deref(impl_).trace(); }

double EigenSystem::kernel_partial_sum(const Point& x, const Point& y, std::size_t M) const {
  if (M > count())
    throw std::invalid_argument("kernel_partial_sum: M exceeds stored count");
  const auto& impl = deref(impl_);
  double s = 0;
  for (std::size_t j = 0; j < M; ++j)
    s += impl.eigenvalue(j) * impl.eval(j, x) * impl.eval(j, y);
  return s;
}

FieldFunction EigenSystem::eigenfunction_on(std::size_t j, const GridPtr& grid) const {
  if (j >= count())
    throw std::invalid_argument("eigenfunction_on: index beyond stored spectrum");
  const auto& impl = deref(impl_);
  return make_field(grid, [&](Point p) { return impl.eval(j, p); });
}

Eigen::MatrixXd EigenSystem::basis_on(const GridPtr& grid, std::size_t m) const {
  if (m > count())
    throw std::invalid_argument("basis_on: m exceeds stored spectrum");
  if (!grid)
    throw std::invalid_argument("basis_on: null grid");
  const auto& impl = deref(impl_);
  Eigen::MatrixXd B(m, grid->size());
  for (Eigen::Index i = 0; i < grid->size(); ++i) {
    const Point p = grid->node(i);
    for (std::size_t j = 0; j < m; ++j)
      B(static_cast<Eigen::Index>(j), i) = impl.eval(j, p);
  }
  return B;
}

const NystromSolve* EigenSystem::nystrom() const { return deref(impl_).nystrom(); }

double kernel_partial_sum(const EigenSystem& sys, const Point& x, const Point& y, std::size_t M) {
  return sys.kernel_partial_sum(x, y, M);
}

double tail_sum(const EigenSystem& sys, std::size_t n) { return sys.tail_sum(n); }

void write_spectrum_csv(std::ostream& os, const EigenSystem& sys) {
  os << "rank,eigenvalue,label\n";
  for (std::size_t j = 0; j < sys.count(); ++j)
    os << (j + 1) << ',' << fmt_g(sys.eigenvalue(j)) << ',' << sys.label(j) << '\n';
}

// ---------------------------------------------------------------------------
// Shared trigonometric backend (torus and Dirichlet box)

namespace {

enum class TrigFlavor { Torus, Box };

struct TrigMember {
  double lambda = 0;
  long norm2 = 0;            // |j|_2^2
  std::array<int, 2> freq{}; // multi-index
  std::array<int, 2> pat{};  // 0 const, 1 cos, 2 sin (torus); unused for box
};

bool member_before(const TrigMember& a, const TrigMember& b) {
  // Eigenvalue descending; ties by |j|^2, then lexicographic index, then
  // cosine before sine.
  return std::tie(b.lambda, a.norm2, a.freq[0], a.freq[1], a.pat[0], a.pat[1]) <
         std::tie(a.lambda, b.norm2, b.freq[0], b.freq[1], b.pat[0], b.pat[1]);
}

class SeparableTrigImpl final : public EigenSystemImpl {
public:
  SeparableTrigImpl(TrigFlavor flavor, double alpha, double beta, double gamma, int dim,
                    std::size_t count)
      : flavor_(flavor), alpha_(alpha), beta_(beta), gamma_(gamma), dim_(dim), count_(count) {
    if (!(alpha > 0) || !(beta > 0))
      throw std::invalid_argument("eigensystem: alpha and beta must be positive");
    if (dim != 1 && dim != 2)
      throw std::invalid_argument("eigensystem: dim must be 1 or 2");
    if (count < 1)
      throw std::invalid_argument("eigensystem: count must be >= 1");
    if (!(2.0 * gamma > static_cast<double>(dim)))
      throw std::invalid_argument("eigensystem: trace class needs 2*gamma > dim");

    const std::size_t extended = std::max<std::size_t>(16384, 4 * count);
    enumerate(extended);
    if (members_.size() < count)
      throw NumericalError("eigensystem: enumeration shorter than requested count");

    labels_.reserve(count_);
    for (std::size_t j = 0; j < count_; ++j)
      labels_.push_back(make_label(members_[j]));
  }

  int dim() const override { return dim_; }
  Domain domain() const override {
    return flavor_ == TrigFlavor::Torus ? Domain::Torus01 : Domain::Box01;
  }
  std::size_t count() const override { return count_; }
  double eigenvalue(std::size_t j) const override { return members_[j].lambda; }
  const std::string& label(std::size_t j) const override { return labels_[j]; }
  std::string kind() const override {
    return flavor_ == TrigFlavor::Torus ? "torus" : "dirichlet-box";
  }
  nlohmann::json params() const override {
    return {{"alpha", alpha_}, {"beta", beta_}, {"gamma", gamma_}, {"dim", dim_}};
  }

  double eval(std::size_t j, const Point& x) const override {
    const TrigMember& m = members_[j];
    double v = 1.0;
    for (int i = 0; i < dim_; ++i)
      v *= factor(m.freq[static_cast<std::size_t>(i)], m.pat[static_cast<std::size_t>(i)],
                  x[static_cast<std::size_t>(i)]);
    return v;
  }

  double trace() const override { return trace_; }

  double head_sum(std::size_t n) const override {
    if (n >= static_cast<std::size_t>(prefix_.size()))
      return prefix_.empty() ? 0.0 : prefix_.back();
    return prefix_[n];
  }

private:
  double lambda_of(long norm2) const {
    const double scale = flavor_ == TrigFlavor::Torus ? 4.0 * M_PI * M_PI : M_PI * M_PI;
    return alpha_ * std::pow(beta_ + scale * static_cast<double>(norm2), -gamma_);
  }

  double factor(int freq, int pat, double x) const {
    if (flavor_ == TrigFlavor::Box)
      return std::sqrt(2.0) * std::sin(freq * M_PI * x);
    if (pat == 0)
      return 1.0;
    const double arg = 2.0 * M_PI * freq * x;
    return std::sqrt(2.0) * (pat == 1 ? std::cos(arg) : std::sin(arg));
  }

  std::string make_label(const TrigMember& m) const {
    std::string s;
    for (int i = 0; i < dim_; ++i) {
      if (i)
        s += '*';
      const int f = m.freq[static_cast<std::size_t>(i)];
      if (flavor_ == TrigFlavor::Box) {
        s += 'S' + std::to_string(f);
      } else if (m.pat[static_cast<std::size_t>(i)] == 0) {
        s += '1';
      } else {
        s += (m.pat[static_cast<std::size_t>(i)] == 1 ? 'c' : 's');
        s += std::to_string(f);
      }
    }
    return s;
  }

  void append_members(std::vector<TrigMember>& out, const std::array<int, 2>& freq) const {
    long norm2 = 0;
    for (int i = 0; i < dim_; ++i)
      norm2 += static_cast<long>(freq[static_cast<std::size_t>(i)]) *
               freq[static_cast<std::size_t>(i)];
    const double lambda = lambda_of(norm2);
    if (flavor_ == TrigFlavor::Box) {
      out.push_back({lambda, norm2, freq, {0, 0}});
      return;
    }
    // One member per sine/cosine pattern of the nonzero coordinates.
    std::array<int, 2> pat{0, 0};
    const int options0 = freq[0] == 0 ? 1 : 2;
    const int options1 = (dim_ == 2 && freq[1] != 0) ? 2 : 1;
    for (int a = 0; a < options0; ++a) {
      pat[0] = freq[0] == 0 ? 0 : (a + 1);
      for (int b = 0; b < options1; ++b) {
        pat[1] = (dim_ == 2 && freq[1] != 0) ? (b + 1) : 0;
        out.push_back({lambda, norm2, freq, pat});
      }
    }
  }

  void enumerate(std::size_t target) {
    const int lo = flavor_ == TrigFlavor::Torus ? 0 : 1;
    int r = 8;
    std::vector<TrigMember> all;
    for (;;) {
      all.clear();
      if (dim_ == 1) {
        for (int j = lo; j <= r; ++j)
          append_members(all, {j, 0});
      } else {
        for (int j1 = lo; j1 <= r; ++j1)
          for (int j2 = lo; j2 <= r; ++j2)
            append_members(all, {j1, j2});
      }
      std::sort(all.begin(), all.end(), member_before);
      // Any multi-index outside the |j|_inf <= r box has |j|_2^2 at least
      // boundary_norm2, so the first `target` entries are final once the
      // boundary eigenvalue drops strictly below the target-th one.
      const long boundary_norm2 =
          static_cast<long>(r + 1) * (r + 1) + (flavor_ == TrigFlavor::Box ? (dim_ - 1) : 0);
      const double boundary_lambda = lambda_of(boundary_norm2);
      if (all.size() >= target && boundary_lambda < all[target - 1].lambda) {
        // Keep only norm2 < boundary_norm2: every multi-index class below the
        // boundary lies inside the |j|_inf box, so the kept list is a complete
        // leading section of the spectrum.
        std::size_t cut = all.size();
        while (cut > target && all[cut - 1].norm2 >= boundary_norm2)
          --cut;
        all.resize(cut);
        break;
      }
      r = r + std::max(4, r / 2);
    }
    members_.assign(all.begin(), all.end());

    prefix_.resize(members_.size() + 1);
    prefix_[0] = 0.0;
    for (std::size_t j = 0; j < members_.size(); ++j)
      prefix_[j + 1] = prefix_[j] + members_[j].lambda;

    trace_ = prefix_.back() + continuum_remainder(members_.back().norm2);
  }

  // Integral-comparison estimate of the eigenvalue sum over all
  // multi-indices with |j|_2^2 > S (the part past the stored spectrum).
  double continuum_remainder(long S) const {
    const double R = std::sqrt(static_cast<double>(S));
    if (flavor_ == TrigFlavor::Torus) {
      if (dim_ == 1)
        return 2.0 * alpha_ * std::pow(4.0 * M_PI * M_PI, -gamma_) *
               std::pow(R, 1.0 - 2.0 * gamma_) / (2.0 * gamma_ - 1.0);
      return alpha_ / (4.0 * M_PI * (gamma_ - 1.0)) *
             std::pow(beta_ + 4.0 * M_PI * M_PI * R * R, 1.0 - gamma_);
    }
    if (dim_ == 1)
      return alpha_ * std::pow(M_PI * M_PI, -gamma_) * std::pow(R, 1.0 - 2.0 * gamma_) /
             (2.0 * gamma_ - 1.0);
    return alpha_ / (4.0 * M_PI * (gamma_ - 1.0)) *
           std::pow(beta_ + M_PI * M_PI * R * R, 1.0 - gamma_);
  }

  TrigFlavor flavor_;
  double alpha_, beta_, gamma_;
  int dim_;
  std::size_t count_;
  std::vector<TrigMember> members_;
  std::vector<std::string> labels_;
  std::vector<double> prefix_;
  double trace_ = 0;
};

// ---------------------------------------------------------------------------
// Brownian motion on [0,1]

class BrownianImpl final : public EigenSystemImpl {
public:
  explicit BrownianImpl(std::size_t count) : count_(count) {
    if (count < 1)
      throw std::invalid_argument("brownian_eigensystem: count must be >= 1");
    labels_.reserve(count_);
    for (std::size_t j = 0; j < count_; ++j)
      labels_.push_back("b" + std::to_string(j + 1));
    const std::size_t cached = std::max<std::size_t>(16384, count_);
    prefix_.resize(cached + 1);
    prefix_[0] = 0.0;
    for (std::size_t j = 0; j < cached; ++j)
      prefix_[j + 1] = prefix_[j] + lambda_at(j);
  }

  int dim() const override { return 1; }
  Domain domain() const override { return Domain::Box01; }
  std::size_t count() const override { return count_; }
  double eigenvalue(std::size_t j) const override { return lambda_at(j); }
  const std::string& label(std::size_t j) const override { return labels_[j]; }
  std::string kind() const override { return "brownian"; }
  nlohmann::json params() const override { return nlohmann::json::object(); }

  double eval(std::size_t j, const Point& x) const override {
    return std::sqrt(2.0) * std::sin((static_cast<double>(j) + 0.5) * M_PI * x[0]);
  }

  // trace = integral of min(t,t) over [0,1] = 1/2.
  double trace() const override { return 0.5; }

  double head_sum(std::size_t n) const override {
    if (n < prefix_.size())
      return prefix_[n];
    // Trigamma tail: sum_{j>n} ((j-1/2) pi)^-2 = psi_1(n + 1/2) / pi^2.
    const double z = static_cast<double>(n) + 0.5;
    const double tail =
        (1.0 / z + 1.0 / (2.0 * z * z) + 1.0 / (6.0 * z * z * z)) / (M_PI * M_PI);
    return 0.5 - tail;
  }

private:
  static double lambda_at(std::size_t j) {
    const double half_index = static_cast<double>(j) + 0.5;
    return 1.0 / (half_index * half_index * M_PI * M_PI);
  }

  std::size_t count_;
  std::vector<std::string> labels_;
  std::vector<double> prefix_;
};

// ---------------------------------------------------------------------------
// RBF kernel under a centered Gaussian measure (Hermite eigenpairs)

// Raw (unnormalized) eigenfunction exp(-(c-a)x^2) H_j(sqrt(2c) x) with H_j
// from the three-term recurrence.
double rbf_raw_eval(const RbfEigParams& p, int order, double x) {
  const double u = std::sqrt(2.0 * p.c) * x;
  double h_prev = 1.0;
  double h = 2.0 * u;
  if (order == 0)
    h = h_prev;
  for (int k = 1; k < order; ++k) {
    const double h_next = 2.0 * u * h - 2.0 * k * h_prev;
    h_prev = h;
    h = h_next;
  }
  return std::exp(-(p.c - p.a) * x * x) * h;
}

class RbfImpl final : public EigenSystemImpl {
public:
  RbfImpl(double lengthscale, double sigma2, int dim, std::size_t count, double radius,
          int norm_points)
      : params_(RbfEigParams::from(lengthscale, sigma2)), dim_(dim), count_(count),
        radius_(radius) {
    if (dim != 1 && dim != 2)
      throw std::invalid_argument("rbf_eigensystem: dim must be 1 or 2");
    if (count < 1)
      throw std::invalid_argument("rbf_eigensystem: count must be >= 1");
    if (!(radius > 0) || norm_points < 16)
      throw std::invalid_argument("rbf_eigensystem: bad truncation radius or norm grid");

    enumerate();
    normalize(norm_points);

    labels_.reserve(count_);
    for (std::size_t j = 0; j < count_; ++j) {
      std::string s;
      for (int i = 0; i < dim_; ++i) {
        if (i)
          s += '*';
        s += 'H' + std::to_string(orders_[j][static_cast<std::size_t>(i)]);
      }
      labels_.push_back(std::move(s));
    }
  }

  int dim() const override { return dim_; }
  Domain domain() const override { return Domain::IntervalPM1; }
  Measure native_measure() const override { return Measure::gaussian(params_.sigma2); }
  std::size_t count() const override { return count_; }
  double eigenvalue(std::size_t j) const override { return lambda_of_total(total_order_[j]); }
  const std::string& label(std::size_t j) const override { return labels_[j]; }
  std::string kind() const override { return "rbf"; }
  nlohmann::json params() const override {
    return {{"lengthscale", params_.lengthscale}, {"sigma2", params_.sigma2},
            {"dim", dim_},                        {"radius", radius_},
            {"a", params_.a},                     {"b", params_.b},
            {"c", params_.c}};
  }

  double eval(std::size_t j, const Point& x) const override {
    double v = 1.0;
    for (int i = 0; i < dim_; ++i) {
      const int order = orders_[j][static_cast<std::size_t>(i)];
      v *= normalizer_[static_cast<std::size_t>(order)] *
           rbf_raw_eval(params_, order, x[static_cast<std::size_t>(i)]);
    }
    return v;
  }

  double trace() const override {
    const double t1 = params_.top_eigenvalue() / (1.0 - params_.ratio());
    return dim_ == 1 ? t1 : t1 * t1;
  }

  double head_sum(std::size_t n) const override {
    if (dim_ == 1) {
      // Geometric series, exact for every n.
      const double g = params_.ratio();
      return params_.top_eigenvalue() * (1.0 - std::pow(g, static_cast<double>(n))) / (1.0 - g);
    }
    if (n >= static_cast<std::size_t>(prefix_.size()))
      return prefix_.back();
    return prefix_[n];
  }

private:
  double lambda_of_total(int total) const {
    return std::pow(params_.top_eigenvalue(), dim_) *
           std::pow(params_.ratio(), static_cast<double>(total));
  }

  void enumerate() {
    const std::size_t extended = std::max<std::size_t>(4096, 4 * count_);
    // Shells of constant total order; within a shell lexicographic order.
    std::size_t produced = 0;
    for (int total = 0; produced < extended; ++total) {
      if (dim_ == 1) {
        push_member({total, 0}, total, produced < count_);
        ++produced;
      } else {
        for (int j1 = total; j1 >= 0; --j1) {
          push_member({j1, total - j1}, total, produced < count_);
          if (++produced >= extended && produced >= count_)
            break;
        }
      }
    }
    prefix_.resize(produced + 1);
    prefix_[0] = 0.0;
    for (std::size_t j = 0; j < produced; ++j)
      prefix_[j + 1] = prefix_[j] + lambda_of_total(extended_totals_[j]);

    max_order_ = 0;
    for (std::size_t j = 0; j < count_; ++j)
      max_order_ = std::max(max_order_, std::max(orders_[j][0], orders_[j][1]));
    if (max_order_ > 128)
      throw std::invalid_argument(
          "rbf_eigensystem: Hermite order beyond 128 overflows the recurrence");
  }

  void push_member(std::array<int, 2> order, int total, bool evaluable) {
    extended_totals_.push_back(total);
    if (evaluable) {
      orders_.push_back(order);
      total_order_.push_back(total);
    }
  }

  // Rescale each 1d factor so its discrete weighted norm over [-R, R] is 1
  // (midpoint rule against the Gaussian density).
  void normalize(int norm_points) {
    normalizer_.assign(static_cast<std::size_t>(max_order_) + 1, 1.0);
    const double h = 2.0 * radius_ / norm_points;
    const double pdf_scale = 1.0 / std::sqrt(2.0 * M_PI * params_.sigma2);
    for (int order = 0; order <= max_order_; ++order) {
      double norm_sq = 0;
      for (int k = 0; k < norm_points; ++k) {
        const double x = -radius_ + (k + 0.5) * h;
        const double raw = rbf_raw_eval(params_, order, x);
        norm_sq += raw * raw * pdf_scale * std::exp(-x * x / (2.0 * params_.sigma2)) * h;
      }
      if (!(norm_sq > 0) || !std::isfinite(norm_sq))
        throw NumericalError("rbf_eigensystem: degenerate eigenfunction normalization");
      normalizer_[static_cast<std::size_t>(order)] = 1.0 / std::sqrt(norm_sq);
    }
  }

  RbfEigParams params_;
  int dim_;
  std::size_t count_;
  double radius_;
  int max_order_ = 0;
  std::vector<std::array<int, 2>> orders_; // per stored member
  std::vector<int> total_order_;
  std::vector<int> extended_totals_;
  std::vector<double> normalizer_; // per 1d Hermite order
  std::vector<std::string> labels_;
  std::vector<double> prefix_;
};

} // namespace

// ---------------------------------------------------------------------------
// Constructors

RbfEigParams RbfEigParams::from(double lengthscale, double sigma2) {
  if (!(lengthscale > 0) || !(sigma2 > 0))
    throw std::invalid_argument("RbfEigParams: lengthscale and sigma2 must be positive");
  RbfEigParams p;
  p.lengthscale = lengthscale;
  p.sigma2 = sigma2;
  p.a = 1.0 / (4.0 * sigma2);
  p.b = 1.0 / (2.0 * lengthscale * lengthscale);
  p.c = std::sqrt(p.a * p.a + 2.0 * p.a * p.b);
  return p;
}

EigenSystem torus_eigensystem(double alpha, double beta, double gamma, int dim,
                              std::size_t count) {
  return EigenSystem(
      std::make_shared<SeparableTrigImpl>(TrigFlavor::Torus, alpha, beta, gamma, dim, count));
}

EigenSystem dirichlet_box_eigensystem(double alpha, double beta, double gamma, int dim,
                                      std::size_t count) {
  return EigenSystem(
      std::make_shared<SeparableTrigImpl>(TrigFlavor::Box, alpha, beta, gamma, dim, count));
}

EigenSystem brownian_eigensystem(std::size_t count) {
  return EigenSystem(std::make_shared<BrownianImpl>(count));
}

EigenSystem rbf_eigensystem_1d(double lengthscale, double sigma2, std::size_t count,
                               double radius, int norm_points) {
  return EigenSystem(std::make_shared<RbfImpl>(lengthscale, sigma2, 1, count, radius, norm_points));
}

EigenSystem rbf_eigensystem_nd(double lengthscale, double sigma2, int dim, std::size_t count,
                               double radius, int norm_points) {
  return EigenSystem(
      std::make_shared<RbfImpl>(lengthscale, sigma2, dim, count, radius, norm_points));
}

} // namespace opal

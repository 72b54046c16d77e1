#pragma once

#include "anosov/random.hpp"
#include "anosov/series.hpp"

#include <Eigen/Dense>

#include <array>
#include <complex>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace anosov {

using Complex = std::complex<double>;

// Unit-determinant 2x2 matrix acting on the upper half-plane by Mobius maps.
template <typename Scalar>
struct GroupElement {
  using Matrix = Eigen::Matrix<Scalar, 2, 2>;
  Matrix m = Matrix::Identity();

  GroupElement() = default;
  explicit GroupElement(const Matrix& mat) : m(mat) {}

  Scalar det() const { return m.determinant(); }
  Scalar trace() const { return m.trace(); }

  GroupElement inverse() const {
    Matrix inv;
    inv << m(1, 1), -m(0, 1), -m(1, 0), m(0, 0);
    return GroupElement(inv);
  }

  // Rescale so det = 1 exactly up to rounding.
  GroupElement& renormalize() {
    const Scalar d = m.determinant();
    m /= std::sqrt(d);
    return *this;
  }

  friend GroupElement operator*(const GroupElement& a, const GroupElement& b) {
    GroupElement r(a.m * b.m);
    r.renormalize();
    return r;
  }
};

using Group = GroupElement<double>;

// Diagonal flow generator exp(t * diag(lambda0/2, -lambda0/2)).
template <typename Scalar>
GroupElement<Scalar> flow_element(Scalar t, Scalar lambda0) {
  typename GroupElement<Scalar>::Matrix a = GroupElement<Scalar>::Matrix::Zero();
  a(0, 0) = std::exp(lambda0 * t / 2);
  a(1, 1) = std::exp(-lambda0 * t / 2);
  return GroupElement<Scalar>(a);
}

// Disk geometry. w = (z - i)/(z + i) maps the upper half-plane to the disk.
Complex half_plane_to_disk(Complex z);
Complex disk_to_half_plane(Complex w);
double disk_distance(Complex a, Complex b);
double disk_distance_to_origin(Complex w);
Complex mobius(const Group& g, Complex z);
Complex mobius_derivative(const Group& g, Complex z);
// Disk-model action of an element given in half-plane form.
Complex disk_action(const Group& g, Complex w);
Complex disk_action_derivative(const Group& g, Complex w);

// Regular octagon with interior angles pi/4, centered at the disk origin.
struct Octagon {
  static double side_distance();    // hyperbolic distance centre to side midpoint
  static double circumradius();     // hyperbolic distance centre to vertex
  static double disk_circumradius();  // Euclidean radius of the vertices in the disk
  static constexpr double area() { return 4.0 * 3.14159265358979323846; }
};

// Side pairings gamma_0..gamma_7 (gamma_{k+4} = gamma_k^{-1}); gamma_k maps
// the octagon across side k.
const std::array<Group, 8>& octagon_generators();
// Word whose product is +-identity.
const std::vector<int>& octagon_relation();
Group word_product(const std::vector<int>& word);

bool in_octagon(Complex w, double tol = 1e-12);

struct AlgebraicPoint {
  Group g;
};

// Greedy nearest-point folding into the octagon; throws NumericError after
// max_iter folds.
AlgebraicPoint reduce(const Group& g, int max_iter = 64);

// Distance between the unit tangent vectors represented by a and b (the sign
// of the matrix is irrelevant).
double point_distance(const AlgebraicPoint& a, const AlgebraicPoint& b);

// Surface data of a unit tangent vector: disk position and Euclidean disk
// velocity of the flow.
struct SurfaceTangent {
  Complex w;
  Complex velocity;
};

struct DiskState {
  Complex w;
  double psi = 0.0;  // direction angle in the disk chart
};

DiskState to_disk(const Group& g);
Group from_disk(Complex w, double psi);

// Rejection sampler for the normalized Liouville measure on the octagon.
DiskState sample_liouville_disk(std::mt19937_64& rng);

class AlgebraicBackend {
 public:
  using Point = AlgebraicPoint;
  static constexpr bool is_contact = true;
  static constexpr bool is_anosov = true;

  explicit AlgebraicBackend(double lambda0 = 1.0);

  double lambda0() const { return lambda0_; }
  Point advance(const Point& p, double t) const;
  // Constant rates; aux carries K and the disk position (w_re, w_im, psi).
  RateSample rates(const Point& p) const;
  std::optional<double> volume() const;
  std::string name() const { return "algebraic"; }

  Point random_point(std::mt19937_64& rng) const;
  SurfaceTangent tangent(const Point& p) const;
  SurfaceTangent tangent(Complex w, double psi) const;

 private:
  double lambda0_;
};

struct ClosedGeodesic {
  std::vector<int> word;
  double T = 0.0;
  double lambda_u = 0.0;
  AlgebraicPoint axis_point;
};

ClosedGeodesic closed_geodesic_data(const std::vector<int>& word, double lambda0);

// Frame identities of the constant-rate model, computed in sl(2,R).
struct FrameCheck {
  double bracket_residual;  // max deviation of [Y,Z]=2X, [Z,X]=-lY, [X,Y]=lZ
  double stable_rate;           // rate of the stable frame vector
  double unstable_rate;         // rate of the unstable frame vector
  double pushforward_stable_rate;  // from Ad(exp(-tX)) of the stable vector
};
FrameCheck algebraic_frame_check(double lambda0);

}  // namespace anosov

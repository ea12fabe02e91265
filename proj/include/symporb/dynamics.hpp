#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <string>
#include <vector>

// Rotating-frame dynamics for the circular restricted three-body problem
// (CRTBP) and Hill's lunar problem, together with their discrete symmetries.
//
// State convention throughout the library: a 6-vector (x, y, z, vx, vy, vz)
// of rotating-frame position and velocity. Canonical momenta are
// p = (vx - y, vy + x, vz); conversion helpers below are exact linear maps.

namespace symporb {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat2 = Eigen::Matrix2d;
using Mat4 = Eigen::Matrix4d;
using Mat6 = Eigen::Matrix<double, 6, 6>;

inline constexpr double kJupiterEuropaMassRatio = 2.5266448850435e-05;
inline constexpr double kDefaultCollisionRadius = 1e-6;

struct CollisionProximity : std::runtime_error {
    double distance;
    explicit CollisionProximity(double d)
        : std::runtime_error("state within collision radius of a primary (r = " +
                             std::to_string(d) + ")"),
          distance(d) {}
};

struct SymmetryNotApplicable : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class ModelKind { crtbp, hill };

struct Model {
    ModelKind kind = ModelKind::crtbp;
    double mu = kJupiterEuropaMassRatio;
    double collision_radius = kDefaultCollisionRadius;

    static Model crtbp(double mass_ratio);
    static Model hill();
    static Model jupiter_europa() { return crtbp(kJupiterEuropaMassRatio); }
    // mu -> 0 limit of the CRTBP (rotating Kepler problem); the closed-form
    // oracle case of the test suites and the seed end of mass continuation.
    static Model rotating_kepler();

    bool is_hill() const { return kind == ModelKind::hill; }

    // (-mu, 0, 0) for CRTBP; Hill is centred on its single primary.
    Vec3 primary_position() const;
    // (1-mu, 0, 0) for CRTBP; origin for Hill.
    Vec3 secondary_position() const;
};

// --- canonical <-> position-velocity -------------------------------------

Vec6 to_canonical(const Vec6& pv);
Vec6 from_canonical(const Vec6& qp);
const Mat6& canonical_from_pv();     // constant matrix T with qp = T * pv
const Mat6& pv_from_canonical();     // T^{-1}
const Mat6& symplectic_form();       // standard J in canonical coordinates

// --- scalar invariants -----------------------------------------------------

double hamiltonian(const Model& m, const Vec6& pv);
// Jacobi constant with the convention Gamma = -2 H (matches table magnitudes
// Gamma ~ 3.00x for the Jupiter-Europa system).
double jacobi_gamma(const Model& m, const Vec6& pv);
// Gradient of H in position-velocity coordinates.
Vec6 hamiltonian_gradient(const Model& m, const Vec6& pv);
// Gradient of H in canonical coordinates.
Vec6 hamiltonian_gradient_canonical(const Model& m, const Vec6& pv);

// Smallest distance to a primary (both primaries for CRTBP, origin for Hill).
double min_primary_distance(const Model& m, const Vec6& pv);
void require_clear_of_primaries(const Model& m, const Vec6& pv);

// --- vector field and linearization ---------------------------------------

Vec6 vector_field(const Model& m, const Vec6& pv);
// Jacobian of the vector field in position-velocity coordinates.
Mat6 variational_matrix(const Model& m, const Vec6& pv);
// Same linearization conjugated into canonical coordinates.
Mat6 variational_matrix_canonical(const Model& m, const Vec6& pv);
// Exact conjugation of a position-velocity STM into canonical coordinates.
Mat6 stm_to_canonical(const Mat6& stm_pv);
Mat6 stm_from_canonical(const Mat6& stm_qp);

// --- discrete symmetries ---------------------------------------------------

enum class SymmetryName { rho, rho_tilde, sigma, kappa, kappa_tilde };

struct Symmetry {
    SymmetryName name;
    Vec6 signs_pv;         // diagonal action on (x,y,z,vx,vy,vz)
    Vec6 signs_canonical;  // diagonal action on (q1,q2,q3,p1,p2,p3)
    bool antisymplectic;
    bool hill_only;
};

const Symmetry& symmetry(SymmetryName name);
const std::vector<SymmetryName>& all_symmetries();
bool symmetry_applies(const Model& m, SymmetryName name);
Vec6 apply_symmetry(SymmetryName name, const Vec6& pv);
Vec6 apply_symmetry_checked(const Model& m, SymmetryName name, const Vec6& pv);

std::string symmetry_label(SymmetryName name);
SymmetryName symmetry_from_label(const std::string& label);

// Coordinates (position-velocity indexing) that vanish on the fixed locus.
std::vector<int> fixed_locus_coordinates(SymmetryName name);
// Max-norm of the locus coordinates of a state.
double fixed_locus_distance(SymmetryName name, const Vec6& pv);

}  // namespace symporb

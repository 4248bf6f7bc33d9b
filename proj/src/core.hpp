#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace rlmesh {

enum class ProblemKind : std::uint8_t { burgers = 0, darcy = 1, lorenz96 = 2 };

const char* problem_kind_name(ProblemKind k);
ProblemKind problem_kind_from_name(const std::string& name);

enum class BoundaryMode : std::uint8_t { dirichlet_walls = 0, periodic = 1 };

struct BurgersSpec {
    double viscosity = 0.002;
    double horizon = 1.0;
    int grid_n = 129;
    BoundaryMode boundary = BoundaryMode::dirichlet_walls;
};

struct DarcySpec {
    int grid_n = 128;
    double forcing = 1.0;
    double level_low = 4.0;   // assigned above the median
    double level_high = 12.0; // assigned below the median
    int patch_n = 16;         // agent action grid (patch_n x patch_n)
};

struct Lorenz96Spec {
    int dim = 60;
    double forcing = 4.0;
    double dt = 0.01;
    double horizon = 1.0;
};

struct ProblemSpec {
    ProblemKind kind = ProblemKind::burgers;
    BurgersSpec burgers;
    DarcySpec darcy;
    Lorenz96Spec lorenz96;

    /// Throws std::invalid_argument naming the offending field.
    void validate() const;

    /// Entries in a dense field (129, n*n, 60).
    int dense_size() const;
    /// Discrete action count for the selection MDP (129, patch_n^2, 60).
    int action_count() const;
};

/// Sorted 1D node positions in [0, 1].
struct SpatialGrid {
    std::vector<double> coords;
    double nominal_spacing = 0.0;

    static SpatialGrid uniform(int n);
    static SpatialGrid from_coords(std::vector<double> coords, double nominal_spacing);

    int size() const { return static_cast<int>(coords.size()); }
};

struct Field {
    std::vector<double> values;
    int channels = 1;

    int size() const { return static_cast<int>(values.size()); }
    bool finite() const;
};

/// Ordered distinct grid indices chosen for one instance under budget B.
struct SelectionMask {
    std::vector<int> indices;
    int budget = 0;

    int size() const { return static_cast<int>(indices.size()); }
    /// Throws std::invalid_argument on budget overflow, repeats, range errors.
    void validate(int grid_size) const;
};

struct LabeledSample {
    Field input;
    SelectionMask mask;
    std::vector<double> observed;  // solver values at mask indices, mask order
};

struct Provenance {
    std::uint64_t seed = 0;
    std::uint32_t iteration = 0;
};

/// Append-only training set. Sample i carries provenance i.
struct Dataset {
    ProblemKind kind = ProblemKind::burgers;
    std::uint32_t grid_size = 0;
    std::vector<LabeledSample> samples;
    std::vector<Provenance> provenance;

    std::size_t size() const { return samples.size(); }
    void append(LabeledSample sample, Provenance prov);
};

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Pooled RMSE over all entries of all fields.
/// Throws std::invalid_argument naming both shapes on mismatch.
double rmse(const std::vector<Field>& predictions, const std::vector<Field>& truths);

/// Map query positions to nearest grid indices; ties break to the lower
/// index; duplicates removed preserving first occurrence.
/// Throws std::invalid_argument for queries outside [0, 1].
std::vector<int> set_to_grid(const std::vector<double>& query_points,
                             const SpatialGrid& grid);

/// Field values at mask indices, in mask order.
std::vector<double> restrict_field(const Field& field, const SelectionMask& mask);

// ---------------------------------------------------------------------------
// Dataset container (binary, little-endian)
//
// header:  magic "RLMD" | u32 version | u8 problem kind | u32 grid size
//          | u64 sample count
// sample:  u64 seed | u32 iteration | u32 channels | u64 input len
//          | f64[input len] | u32 budget | u64 mask len | u32[mask len]
//          | u64 observed len | f64[observed len]
// ---------------------------------------------------------------------------

void save_dataset(const std::string& path, const Dataset& ds);
Dataset load_dataset(const std::string& path);

/// One rmse-log row; written as CSV with columns (iteration, method, seed, rmse).
struct RmseRow {
    int iteration = 0;
    std::string method;
    std::uint64_t seed = 0;
    double rmse = 0.0;
};

void write_rmse_csv(const std::string& path, const std::vector<RmseRow>& rows);

/// Doubles formatted with max_digits10 so CSV reruns are byte-identical.
std::string format_double(double v);

}  // namespace rlmesh

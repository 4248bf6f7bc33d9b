#include "core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

namespace rlmesh {

const char* problem_kind_name(ProblemKind k) {
    switch (k) {
        case ProblemKind::burgers: return "burgers";
        case ProblemKind::darcy: return "darcy";
        case ProblemKind::lorenz96: return "lorenz96";
    }
    return "unknown";
}

ProblemKind problem_kind_from_name(const std::string& name) {
    if (name == "burgers") return ProblemKind::burgers;
    if (name == "darcy") return ProblemKind::darcy;
    if (name == "lorenz96") return ProblemKind::lorenz96;
    throw std::invalid_argument("unknown problem kind: " + name);
}

void ProblemSpec::validate() const {
    if (!(burgers.viscosity > 0)) throw std::invalid_argument("problem.burgers.viscosity must be > 0");
    if (burgers.grid_n < 3) throw std::invalid_argument("problem.burgers.grid_n must be >= 3");
    if (!(burgers.horizon > 0)) throw std::invalid_argument("problem.burgers.horizon must be > 0");
    if (darcy.grid_n < 3) throw std::invalid_argument("problem.darcy.grid_n must be >= 3");
    if (!(darcy.level_low > 0) || !(darcy.level_high > 0))
        throw std::invalid_argument("problem.darcy coefficient levels must be strictly positive");
    if (darcy.patch_n < 1 || darcy.patch_n > darcy.grid_n)
        throw std::invalid_argument("problem.darcy.patch_n must be in [1, grid_n]");
    if (lorenz96.dim < 4) throw std::invalid_argument("problem.lorenz96.dim must be >= 4");
    if (!(lorenz96.dt > 0)) throw std::invalid_argument("problem.lorenz96.dt must be > 0");
    if (!(lorenz96.horizon > 0)) throw std::invalid_argument("problem.lorenz96.horizon must be > 0");
}

int ProblemSpec::dense_size() const {
    switch (kind) {
        case ProblemKind::burgers: return burgers.grid_n;
        case ProblemKind::darcy: return darcy.grid_n * darcy.grid_n;
        case ProblemKind::lorenz96: return lorenz96.dim;
    }
    return 0;
}

int ProblemSpec::action_count() const {
    switch (kind) {
        case ProblemKind::burgers: return burgers.grid_n;
        case ProblemKind::darcy: return darcy.patch_n * darcy.patch_n;
        case ProblemKind::lorenz96: return lorenz96.dim;
    }
    return 0;
}

SpatialGrid SpatialGrid::uniform(int n) {
    if (n < 2) throw std::invalid_argument("SpatialGrid::uniform needs n >= 2");
    SpatialGrid g;
    g.coords.resize(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) g.coords[static_cast<std::size_t>(i)] = double(i) / double(n - 1);
    g.coords.front() = 0.0;
    g.coords.back() = 1.0;
    g.nominal_spacing = 1.0 / double(n - 1);
    return g;
}

SpatialGrid SpatialGrid::from_coords(std::vector<double> coords, double nominal_spacing) {
    for (std::size_t i = 1; i < coords.size(); ++i) {
        if (!(coords[i] > coords[i - 1]))
            throw std::invalid_argument("SpatialGrid coords must be strictly increasing");
    }
    if (!coords.empty() && (coords.front() < 0.0 || coords.back() > 1.0))
        throw std::invalid_argument("SpatialGrid coords must lie in [0, 1]");
    SpatialGrid g;
    g.coords = std::move(coords);
    g.nominal_spacing = nominal_spacing;
    return g;
}

bool Field::finite() const {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

void SelectionMask::validate(int grid_size) const {
    if (budget <= 0) throw std::invalid_argument("SelectionMask budget must be positive");
    if (size() > budget) throw std::invalid_argument("SelectionMask exceeds its budget");
    std::unordered_set<int> seen;
    for (int idx : indices) {
        if (idx < 0 || idx >= grid_size)
            throw std::invalid_argument("SelectionMask index " + std::to_string(idx) +
                                        " outside grid of size " + std::to_string(grid_size));
        if (!seen.insert(idx).second)
            throw std::invalid_argument("SelectionMask repeats index " + std::to_string(idx));
    }
}

void Dataset::append(LabeledSample sample, Provenance prov) {
    samples.push_back(std::move(sample));
    provenance.push_back(prov);
}

double rmse(const std::vector<Field>& predictions, const std::vector<Field>& truths) {
    auto shape = [](const std::vector<Field>& fs) {
        std::ostringstream os;
        os << "[" << fs.size() << " fields:";
        for (std::size_t i = 0; i < std::min<std::size_t>(fs.size(), 4); ++i)
            os << " " << fs[i].values.size();
        if (fs.size() > 4) os << " ...";
        os << "]";
        return os.str();
    };
    if (predictions.empty() || predictions.size() != truths.size()) {
        throw std::invalid_argument("rmse shape mismatch: predictions " + shape(predictions) +
                                    " vs truths " + shape(truths));
    }
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        if (predictions[i].values.size() != truths[i].values.size()) {
            throw std::invalid_argument("rmse shape mismatch: predictions " + shape(predictions) +
                                        " vs truths " + shape(truths));
        }
        for (std::size_t j = 0; j < predictions[i].values.size(); ++j) {
            double d = predictions[i].values[j] - truths[i].values[j];
            sum += d * d;
        }
        count += predictions[i].values.size();
    }
    if (count == 0) throw std::invalid_argument("rmse over empty fields");
    return std::sqrt(sum / double(count));
}

std::vector<int> set_to_grid(const std::vector<double>& query_points, const SpatialGrid& grid) {
    if (grid.coords.empty()) throw std::invalid_argument("set_to_grid on empty grid");
    std::vector<int> out;
    out.reserve(query_points.size());
    std::unordered_set<int> seen;
    for (double q : query_points) {
        if (q < 0.0 || q > 1.0)
            throw std::invalid_argument("set_to_grid query " + std::to_string(q) +
                                        " outside [0, 1]");
        auto it = std::lower_bound(grid.coords.begin(), grid.coords.end(), q);
        int hi = static_cast<int>(it - grid.coords.begin());
        int best;
        if (hi == 0) {
            best = 0;
        } else if (hi == grid.size()) {
            best = grid.size() - 1;
        } else {
            int lo = hi - 1;
            double dlo = q - grid.coords[static_cast<std::size_t>(lo)];
            double dhi = grid.coords[static_cast<std::size_t>(hi)] - q;
            best = (dlo <= dhi) ? lo : hi;  // ties to the lower index
        }
        if (seen.insert(best).second) out.push_back(best);
    }
    return out;
}

std::vector<double> restrict_field(const Field& field, const SelectionMask& mask) {
    std::vector<double> out;
    out.reserve(mask.indices.size());
    for (int idx : mask.indices) {
        if (idx < 0 || idx >= field.size())
            throw std::invalid_argument("restrict_field index " + std::to_string(idx) +
                                        " out of range for field of size " +
                                        std::to_string(field.size()));
        out.push_back(field.values[static_cast<std::size_t>(idx)]);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Binary container
// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[4] = {'R', 'L', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::ostream& os, std::uint32_t v) {
    unsigned char b[4];
    for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 4);
}
void put_u64(std::ostream& os, std::uint64_t v) {
    unsigned char b[8];
    for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
    os.write(reinterpret_cast<const char*>(b), 8);
}
void put_f64(std::ostream& os, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, 8);
    put_u64(os, bits);
}
std::uint32_t get_u32(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(b[i]) << (8 * i);
    return v;
}
std::uint64_t get_u64(std::istream& is) {
    unsigned char b[8];
    is.read(reinterpret_cast<char*>(b), 8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(b[i]) << (8 * i);
    return v;
}
double get_f64(std::istream& is) {
    std::uint64_t bits = get_u64(is);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

}  // namespace

void save_dataset(const std::string& path, const Dataset& ds) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("save_dataset: cannot open " + path);
    os.write(kMagic, 4);
    put_u32(os, kVersion);
    os.put(static_cast<char>(ds.kind));
    put_u32(os, ds.grid_size);
    put_u64(os, ds.samples.size());
    for (std::size_t i = 0; i < ds.samples.size(); ++i) {
        const auto& s = ds.samples[i];
        const auto& p = ds.provenance[i];
        put_u64(os, p.seed);
        put_u32(os, p.iteration);
        put_u32(os, static_cast<std::uint32_t>(s.input.channels));
        put_u64(os, s.input.values.size());
        for (double v : s.input.values) put_f64(os, v);
        put_u32(os, static_cast<std::uint32_t>(s.mask.budget));
        put_u64(os, s.mask.indices.size());
        for (int idx : s.mask.indices) put_u32(os, static_cast<std::uint32_t>(idx));
        put_u64(os, s.observed.size());
        for (double v : s.observed) put_f64(os, v);
    }
    if (!os) throw std::runtime_error("save_dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_dataset: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("load_dataset: bad magic in " + path);
    std::uint32_t version = get_u32(is);
    if (version != kVersion)
        throw std::runtime_error("load_dataset: unsupported version " + std::to_string(version));
    Dataset ds;
    ds.kind = static_cast<ProblemKind>(is.get());
    ds.grid_size = get_u32(is);
    std::uint64_t count = get_u64(is);
    ds.samples.reserve(count);
    ds.provenance.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        Provenance p;
        p.seed = get_u64(is);
        p.iteration = get_u32(is);
        LabeledSample s;
        s.input.channels = static_cast<int>(get_u32(is));
        s.input.values.resize(get_u64(is));
        for (double& v : s.input.values) v = get_f64(is);
        s.mask.budget = static_cast<int>(get_u32(is));
        s.mask.indices.resize(get_u64(is));
        for (int& idx : s.mask.indices) idx = static_cast<int>(get_u32(is));
        s.observed.resize(get_u64(is));
        for (double& v : s.observed) v = get_f64(is);
        if (!is) throw std::runtime_error("load_dataset: truncated file " + path);
        ds.samples.push_back(std::move(s));
        ds.provenance.push_back(p);
    }
    return ds;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(std::numeric_limits<double>::max_digits10);
    os << v;
    return os.str();
}

void write_rmse_csv(const std::string& path, const std::vector<RmseRow>& rows) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw std::runtime_error("write_rmse_csv: cannot open " + path);
    os << "iteration,method,seed,rmse\n";
    for (const auto& r : rows) {
        os << r.iteration << "," << r.method << "," << r.seed << ","
           << format_double(r.rmse) << "\n";
    }
}

}  // namespace rlmesh

#include "generators.hpp"

#include "rng.hpp"
#include "sha256.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <mutex>
#include <stdexcept>

#include "json.hpp"

namespace rlmesh {

namespace {

constexpr std::uint64_t kStreamBurgersParams = 11;
constexpr std::uint64_t kStreamDarcyNoise = 12;
constexpr std::uint64_t kStreamLorenzIc = 13;
constexpr std::uint32_t kGeneratorVersion = 1;

std::mutex& fftw_mutex() {
    static std::mutex m;
    return m;
}

}  // namespace

Field burgers_ic(double a, double b, const SpatialGrid& grid) {
    if (a < 1.0 || a > 6.0 || b < 1.0 || b > 6.0)
        throw std::invalid_argument("burgers_ic parameters must lie in [1, 6]");
    Field f;
    f.values.reserve(grid.coords.size());
    constexpr double kPi = 3.14159265358979323846;
    for (double x : grid.coords)
        f.values.push_back(a * std::exp(-a * x) * std::sin(2.0 * kPi * x) *
                           std::cos(b * kPi * x));
    return f;
}

Field darcy_coefficient(std::uint64_t seed, int n, double level_low, double level_high,
                        double tau) {
    if (n < 8) throw std::invalid_argument("darcy_coefficient needs n >= 8");
    const std::size_t nn = static_cast<std::size_t>(n) * static_cast<std::size_t>(n);
    std::vector<double> noise(nn);
    rng::Stream stream(seed, kStreamDarcyNoise);
    for (double& v : noise) v = stream.next_normal();

    std::vector<double> field(nn);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex());
        const int nc = n / 2 + 1;
        fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(n) *
                                                static_cast<std::size_t>(nc));
        double* in = fftw_alloc_real(nn);
        std::memcpy(in, noise.data(), nn * sizeof(double));
        fftw_plan fwd = fftw_plan_dft_r2c_2d(n, n, in, spec, FFTW_ESTIMATE);
        fftw_execute(fwd);
        for (int ki = 0; ki < n; ++ki) {
            int kx = (ki <= n / 2) ? ki : ki - n;
            for (int kj = 0; kj < nc; ++kj) {
                double k2 = double(kx) * double(kx) + double(kj) * double(kj);
                double amp = 1.0 / (k2 + tau * tau);
                std::size_t p = static_cast<std::size_t>(ki) * static_cast<std::size_t>(nc) +
                                static_cast<std::size_t>(kj);
                spec[p][0] *= amp;
                spec[p][1] *= amp;
            }
        }
        fftw_plan bwd = fftw_plan_dft_c2r_2d(n, n, spec, in, FFTW_ESTIMATE);
        fftw_execute(bwd);
        for (std::size_t i = 0; i < nn; ++i) field[i] = in[i] / double(nn);
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
        fftw_free(spec);
        fftw_free(in);
    }

    std::vector<double> sorted = field;
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(nn / 2),
                     sorted.end());
    double median = sorted[nn / 2];

    Field out;
    out.values.resize(nn);
    for (std::size_t i = 0; i < nn; ++i)
        out.values[i] = (field[i] < median) ? level_high : level_low;
    return out;
}

std::vector<double> lorenz96_ic(std::uint64_t seed, const ProblemSpec& spec) {
    rng::Stream stream(seed, kStreamLorenzIc);
    std::vector<double> x(static_cast<std::size_t>(spec.lorenz96.dim));
    for (double& v : x) v = spec.lorenz96.forcing + 0.5 * stream.next_normal();
    return x;
}

std::pair<double, double> burgers_params(std::uint64_t master_seed, std::uint64_t index) {
    rng::Stream stream(rng::hash_combine(master_seed, index), kStreamBurgersParams);
    double a = stream.next_uniform(1.0, 6.0);
    double b = stream.next_uniform(1.0, 6.0);
    return {a, b};
}

Field sample_input(const ProblemSpec& spec, std::uint64_t master_seed, std::uint64_t index) {
    std::uint64_t instance_seed = rng::hash_combine(master_seed, index);
    switch (spec.kind) {
        case ProblemKind::burgers: {
            auto [a, b] = burgers_params(master_seed, index);
            return burgers_ic(a, b, SpatialGrid::uniform(spec.burgers.grid_n));
        }
        case ProblemKind::darcy:
            return darcy_coefficient(instance_seed, spec.darcy.grid_n, spec.darcy.level_low,
                                     spec.darcy.level_high);
        case ProblemKind::lorenz96: {
            Field f;
            f.values = lorenz96_ic(instance_seed, spec);
            return f;
        }
    }
    throw std::logic_error("sample_input: unreachable");
}

namespace {

Field dense_solve(const ProblemSpec& spec, const Field& input, SolveStats* stats) {
    switch (spec.kind) {
        case ProblemKind::burgers: return burgers_solve_uniform(input, spec, {}, {}, stats);
        case ProblemKind::darcy: return darcy_solve(input, spec, stats);
        case ProblemKind::lorenz96: {
            Field f;
            f.values = lorenz96_solve(input.values, spec, stats);
            return f;
        }
    }
    throw std::logic_error("dense_solve: unreachable");
}

}  // namespace

Corpus build_corpus(const ProblemSpec& spec, int train_count, int test_count,
                    std::uint64_t master_seed, SolveStats* stats) {
    if (train_count < 1 || test_count < 1)
        throw std::invalid_argument("build_corpus counts must be >= 1");
    spec.validate();
    Corpus corpus;
    corpus.spec = spec;
    corpus.master_seed = master_seed;
    corpus.train.reserve(static_cast<std::size_t>(train_count));
    corpus.test.reserve(static_cast<std::size_t>(test_count));
    for (std::uint64_t i = 0; i < std::uint64_t(train_count) + std::uint64_t(test_count); ++i) {
        Instance inst;
        inst.id = i;
        inst.input = sample_input(spec, master_seed, i);
        try {
            inst.dense_solution = dense_solve(spec, inst.input, stats);
        } catch (const std::exception& e) {
            throw std::runtime_error("build_corpus: solver failed on instance " +
                                     std::to_string(i) + ": " + e.what());
        }
        if (i < std::uint64_t(train_count))
            corpus.train.push_back(std::move(inst));
        else
            corpus.test.push_back(std::move(inst));
    }
    return corpus;
}

// ---------------------------------------------------------------------------
// Corpus container
// ---------------------------------------------------------------------------

namespace {

constexpr char kCorpusMagic[4] = {'R', 'L', 'M', 'C'};
constexpr std::uint32_t kCorpusVersion = 1;

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

void put_instance(std::ostream& os, const Instance& inst) {
    put_u64(os, inst.id);
    put_u64(os, inst.input.values.size());
    for (double v : inst.input.values) put_f64(os, v);
    put_u64(os, inst.dense_solution.values.size());
    for (double v : inst.dense_solution.values) put_f64(os, v);
}

Instance get_instance(std::istream& is) {
    Instance inst;
    inst.id = get_u64(is);
    inst.input.values.resize(get_u64(is));
    for (double& v : inst.input.values) v = get_f64(is);
    inst.dense_solution.values.resize(get_u64(is));
    for (double& v : inst.dense_solution.values) v = get_f64(is);
    return inst;
}

}  // namespace

void save_corpus(const std::string& path, const Corpus& corpus) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw std::runtime_error("save_corpus: cannot open " + path);
    os.write(kCorpusMagic, 4);
    put_u32(os, kCorpusVersion);
    os.put(static_cast<char>(corpus.spec.kind));
    put_u32(os, static_cast<std::uint32_t>(corpus.spec.dense_size()));
    put_u64(os, corpus.master_seed);
    put_u64(os, corpus.train.size());
    put_u64(os, corpus.test.size());
    for (const auto& inst : corpus.train) put_instance(os, inst);
    for (const auto& inst : corpus.test) put_instance(os, inst);
    if (!os) throw std::runtime_error("save_corpus: write failed for " + path);
}

Corpus load_corpus(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_corpus: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, kCorpusMagic, 4) != 0)
        throw std::runtime_error("load_corpus: bad magic in " + path);
    std::uint32_t version = get_u32(is);
    if (version != kCorpusVersion)
        throw std::runtime_error("load_corpus: unsupported version");
    Corpus corpus;
    corpus.spec.kind = static_cast<ProblemKind>(is.get());
    get_u32(is);  // dense size, recomputable from spec
    corpus.master_seed = get_u64(is);
    std::uint64_t ntrain = get_u64(is);
    std::uint64_t ntest = get_u64(is);
    corpus.train.reserve(ntrain);
    corpus.test.reserve(ntest);
    for (std::uint64_t i = 0; i < ntrain; ++i) corpus.train.push_back(get_instance(is));
    for (std::uint64_t i = 0; i < ntest; ++i) corpus.test.push_back(get_instance(is));
    if (!is) throw std::runtime_error("load_corpus: truncated file " + path);
    return corpus;
}

void write_corpus_manifest(const std::string& manifest_path, const Corpus& corpus,
                           const std::string& corpus_path) {
    nlohmann::json j;
    j["problem"] = problem_kind_name(corpus.spec.kind);
    j["train_instances"] = corpus.train.size();
    j["test_instances"] = corpus.test.size();
    j["master_seed"] = corpus.master_seed;
    j["generator_version"] = kGeneratorVersion;
    j["dense_size"] = corpus.spec.dense_size();
    j["corpus_sha256"] = sha256_file(corpus_path);
    std::ofstream os(manifest_path, std::ios::trunc);
    if (!os) throw std::runtime_error("write_corpus_manifest: cannot open " + manifest_path);
    os << j.dump(2) << "\n";
}

}  // namespace rlmesh

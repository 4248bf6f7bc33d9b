#pragma once

#include "core.hpp"
#include "solvers.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace rlmesh {

/// u0(x) = a e^{-a x} sin(2 pi x) cos(b pi x); a, b must lie in [1, 6].
Field burgers_ic(double a, double b, const SpatialGrid& grid);

/// Thresholded Gaussian random field on the n x n lattice. White noise is
/// filtered in frequency space with amplitude (|k|^2 + tau^2)^{-1} (power
/// spectrum (|k|^2 + tau^2)^{-2}), tau = 3, then split at its own median:
/// below -> level_high, above -> level_low.
Field darcy_coefficient(std::uint64_t seed, int n, double level_low = 4.0,
                        double level_high = 12.0, double tau = 3.0);

/// x_i = F + delta_i, delta_i ~ Normal(0, 0.5^2), deterministic per seed.
std::vector<double> lorenz96_ic(std::uint64_t seed, const ProblemSpec& spec);

/// One sampled instance: input field plus dense oracle solution.
struct Instance {
    std::uint64_t id = 0;  // global instance index under the master seed
    Field input;
    Field dense_solution;
};

struct Corpus {
    ProblemSpec spec;
    std::uint64_t master_seed = 0;
    std::vector<Instance> train;
    std::vector<Instance> test;
};

/// Draw the input field for global instance index `index` (train and test
/// share the index space; test follows train).
Field sample_input(const ProblemSpec& spec, std::uint64_t master_seed, std::uint64_t index);

/// The (a, b) pair behind a Burgers instance draw.
std::pair<double, double> burgers_params(std::uint64_t master_seed, std::uint64_t index);

/// Inputs from the prior, dense oracle outputs from the uniform solvers,
/// fixed split per seed.
Corpus build_corpus(const ProblemSpec& spec, int train_count, int test_count,
                    std::uint64_t master_seed, SolveStats* stats = nullptr);

// Corpus container: header "RLMC" | u32 version | u8 kind | u32 dense size |
// u64 master seed | u64 train count | u64 test count, then per instance:
// u64 id | u64 input len | f64[...] | u64 output len | f64[...].
void save_corpus(const std::string& path, const Corpus& corpus);
Corpus load_corpus(const std::string& path);

/// Manifest JSON (problem, counts, master seed, generator version, corpus
/// content hash) written next to the corpus file.
void write_corpus_manifest(const std::string& manifest_path, const Corpus& corpus,
                           const std::string& corpus_path);

}  // namespace rlmesh

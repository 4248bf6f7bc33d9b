#include "plot.hpp"

#include "generators.hpp"
#include "harness.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace rlmesh {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

struct SeedCurve {
    std::vector<int> iterations;
    std::vector<double> rmse;
};

SeedCurve read_curve_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    SeedCurve c;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        c.iterations.push_back(std::stoi(f.at(0)));
        c.rmse.push_back(std::stod(f.at(2)));
    }
    return c;
}

const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

struct Canvas {
    double width = 860, height = 560;
    double ml = 70, mr = 200, mt = 40, mb = 60;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;

    double px(double x) const {
        return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr);
    }
    double py(double y) const {
        return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb);
    }
};

std::string fmt(double v) {
    std::ostringstream os;
    os.precision(5);
    os << v;
    return os.str();
}

void draw_axes(std::ostream& os, const Canvas& c, const std::string& xlabel,
               const std::string& ylabel, const std::string& title) {
    os << "<rect x='" << c.ml << "' y='" << c.mt << "' width='" << c.width - c.ml - c.mr
       << "' height='" << c.height - c.mt - c.mb
       << "' fill='none' stroke='#333' stroke-width='1'/>\n";
    for (int t = 0; t <= 5; ++t) {
        double xv = c.xmin + (c.xmax - c.xmin) * t / 5.0;
        double yv = c.ymin + (c.ymax - c.ymin) * t / 5.0;
        os << "<line x1='" << c.px(xv) << "' y1='" << c.height - c.mb << "' x2='" << c.px(xv)
           << "' y2='" << c.height - c.mb + 5 << "' stroke='#333'/>\n";
        os << "<text x='" << c.px(xv) << "' y='" << c.height - c.mb + 20
           << "' font-size='12' text-anchor='middle'>" << fmt(xv) << "</text>\n";
        os << "<line x1='" << c.ml - 5 << "' y1='" << c.py(yv) << "' x2='" << c.ml << "' y2='"
           << c.py(yv) << "' stroke='#333'/>\n";
        os << "<text x='" << c.ml - 8 << "' y='" << c.py(yv) + 4
           << "' font-size='12' text-anchor='end'>" << fmt(yv) << "</text>\n";
    }
    os << "<text x='" << (c.ml + c.width - c.mr) / 2 << "' y='" << c.height - 15
       << "' font-size='14' text-anchor='middle'>" << xlabel << "</text>\n";
    os << "<text x='20' y='" << (c.mt + c.height - c.mb) / 2
       << "' font-size='14' text-anchor='middle' transform='rotate(-90 20 "
       << (c.mt + c.height - c.mb) / 2 << ")'>" << ylabel << "</text>\n";
    os << "<text x='" << (c.ml + c.width - c.mr) / 2 << "' y='24' font-size='16' "
       << "text-anchor='middle'>" << title << "</text>\n";
}

}  // namespace

void plot_curves(const std::string& results_dir, const std::string& problem,
                 const std::string& out_svg) {
    std::string root = results_dir + "/" + problem;
    if (!fs::exists(root)) throw std::runtime_error("no results under " + root);

    // method -> per-seed curves
    std::map<std::string, std::vector<SeedCurve>> curves;
    for (const auto& mdir : fs::directory_iterator(root)) {
        if (!mdir.is_directory()) continue;
        std::string method = mdir.path().filename().string();
        if (method == "pretrain" || method == "sweep") continue;
        for (const auto& sdir : fs::directory_iterator(mdir.path())) {
            if (!sdir.is_directory()) continue;
            fs::path csv = sdir.path() / "curve.csv";
            if (fs::exists(csv)) curves[method].push_back(read_curve_csv(csv.string()));
        }
    }
    if (curves.empty()) throw std::runtime_error("no curve.csv files under " + root);

    Canvas c;
    c.xmin = 1e30;
    c.xmax = -1e30;
    c.ymin = 1e30;
    c.ymax = -1e30;
    struct Band {
        std::vector<int> its;
        std::vector<double> mean, lo, hi;
        bool has_band = false;
    };
    std::map<std::string, Band> bands;
    for (const auto& [method, seeds] : curves) {
        std::size_t iters = seeds.front().iterations.size();
        for (const auto& s : seeds) iters = std::min(iters, s.iterations.size());
        Band b;
        b.has_band = seeds.size() >= 2;
        for (std::size_t i = 0; i < iters; ++i) {
            double mean = 0;
            for (const auto& s : seeds) mean += s.rmse[i];
            mean /= double(seeds.size());
            double var = 0;
            for (const auto& s : seeds) var += (s.rmse[i] - mean) * (s.rmse[i] - mean);
            double sd = seeds.size() >= 2 ? std::sqrt(var / double(seeds.size() - 1)) : 0.0;
            b.its.push_back(seeds.front().iterations[i]);
            b.mean.push_back(mean);
            b.lo.push_back(mean - sd);
            b.hi.push_back(mean + sd);
            c.xmin = std::min(c.xmin, double(b.its.back()));
            c.xmax = std::max(c.xmax, double(b.its.back()));
            c.ymin = std::min(c.ymin, b.lo.back());
            c.ymax = std::max(c.ymax, b.hi.back());
        }
        bands[method] = std::move(b);
    }
    if (c.xmax <= c.xmin) c.xmax = c.xmin + 1;
    double pad = 0.08 * (c.ymax - c.ymin + 1e-12);
    c.ymin = std::max(0.0, c.ymin - pad);
    c.ymax += pad;

    std::ofstream os(out_svg, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + out_svg);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << c.width << "' height='"
       << c.height << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    draw_axes(os, c, "iteration", "test RMSE", problem + ": RMSE vs iterations");

    int color = 0;
    double ly = c.mt + 10;
    for (const auto& [method, b] : bands) {
        const char* col = kColors[color % 8];
        if (b.has_band) {
            os << "<polygon class='band' fill='" << col << "' fill-opacity='0.15' stroke='none' points='";
            for (std::size_t i = 0; i < b.its.size(); ++i)
                os << c.px(b.its[i]) << "," << c.py(b.hi[i]) << " ";
            for (std::size_t i = b.its.size(); i-- > 0;)
                os << c.px(b.its[i]) << "," << c.py(b.lo[i]) << " ";
            os << "'/>\n";
        }
        os << "<polyline class='mean' fill='none' stroke='" << col << "' stroke-width='2' points='";
        for (std::size_t i = 0; i < b.its.size(); ++i)
            os << c.px(b.its[i]) << "," << c.py(b.mean[i]) << " ";
        os << "'/>\n";
        os << "<rect x='" << c.width - c.mr + 15 << "' y='" << ly - 9
           << "' width='18' height='4' fill='" << col << "'/>\n";
        os << "<text x='" << c.width - c.mr + 40 << "' y='" << ly
           << "' font-size='13'>" << method << "</text>\n";
        ly += 20;
        ++color;
    }
    os << "</svg>\n";
}

void plot_selection_overlay(const std::string& results_dir, const std::string& data_dir,
                            const std::string& problem, const std::string& method,
                            const std::string& out_svg, int max_instances) {
    ProblemKind kind = problem_kind_from_name(problem);
    if (kind == ProblemKind::darcy)
        throw std::invalid_argument("selection overlay supports 1D problems only");

    std::string mdir = results_dir + "/" + problem + "/" + method;
    if (!fs::exists(mdir)) throw std::runtime_error("no results under " + mdir);
    std::string sel_csv;
    for (const auto& sdir : fs::directory_iterator(mdir)) {
        if (sdir.is_directory() && fs::exists(sdir.path() / "selections.csv")) {
            sel_csv = (sdir.path() / "selections.csv").string();
            break;
        }
    }
    if (sel_csv.empty()) throw std::runtime_error("no selections.csv under " + mdir);

    std::ifstream in(sel_csv);
    std::string line;
    std::getline(in, line);
    struct Row {
        int iteration;
        std::uint64_t instance;
        std::vector<int> indices;
    };
    std::vector<Row> rows;
    int last_iter = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto f = split_csv_line(line);
        Row r;
        r.iteration = std::stoi(f.at(0));
        r.instance = std::stoull(f.at(1));
        std::istringstream idx(f.at(2));
        int v;
        while (idx >> v) r.indices.push_back(v);
        last_iter = std::max(last_iter, r.iteration);
        rows.push_back(std::move(r));
    }
    std::vector<Row> shown;
    for (const auto& r : rows)
        if (r.iteration == last_iter && static_cast<int>(shown.size()) < max_instances)
            shown.push_back(r);
    if (shown.empty()) throw std::runtime_error("no selection rows in " + sel_csv);

    Corpus corpus = load_corpus(corpus_path(data_dir, kind));
    auto find_input = [&](std::uint64_t id) -> const Field& {
        for (const auto& inst : corpus.train)
            if (inst.id == id) return inst.input;
        for (const auto& inst : corpus.test)
            if (inst.id == id) return inst.input;
        throw std::runtime_error("instance " + std::to_string(id) + " not found in corpus");
    };

    const double width = 860, height = 190.0 * double(shown.size()) + 50;
    std::ofstream os(out_svg, std::ios::trunc);
    if (!os) throw std::runtime_error("cannot write " + out_svg);
    os << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width << "' height='" << height
       << "'>\n<rect width='100%' height='100%' fill='white'/>\n";
    os << "<text x='" << width / 2 << "' y='24' font-size='16' text-anchor='middle'>" << problem
       << ": " << method << " selections, iteration " << last_iter << "</text>\n";

    double top = 40;
    for (const auto& r : shown) {
        const Field& input = find_input(r.instance);
        const int n = input.size();
        double mn = *std::min_element(input.values.begin(), input.values.end());
        double mx = *std::max_element(input.values.begin(), input.values.end());
        if (mx - mn <= 0) mx = mn + 1;
        double ml = 60, mr = 30, h = 150;
        auto px = [&](int i) { return ml + double(i) / double(n - 1) * (width - ml - mr); };
        auto py = [&](double v) { return top + h - (v - mn) / (mx - mn) * (h - 20) - 10; };

        os << "<rect x='" << ml << "' y='" << top << "' width='" << width - ml - mr
           << "' height='" << h << "' fill='none' stroke='#999'/>\n";
        os << "<polyline fill='none' stroke='#1f77b4' stroke-width='1.5' points='";
        for (int i = 0; i < n; ++i)
            os << px(i) << "," << py(input.values[static_cast<std::size_t>(i)]) << " ";
        os << "'/>\n";
        for (int idx : r.indices) {
            os << "<line class='tick' x1='" << px(idx) << "' y1='" << top + h - 12 << "' x2='"
               << px(idx) << "' y2='" << top + h - 2
               << "' stroke='#ff7f0e' stroke-width='1.5'/>\n";
        }
        os << "<text x='" << ml << "' y='" << top - 4 << "' font-size='12'>instance "
           << r.instance << " (" << r.indices.size() << " points)</text>\n";
        top += 190;
    }
    os << "</svg>\n";
}

}  // namespace rlmesh

// Command-line front end. Exit codes: 0 success, 1 numerical or acceptance
// failure, 2 usage error.
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <fmt/core.h>
#include <fmt/os.h>
#include <json.hpp>

#include "couette/verify.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace couette;

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Globals {
    unsigned threads = 0;
    double tol_scale = 1.0;
    std::uint64_t seed = 20240601;
    bool dry_run = false;
};

std::string num(double v) { return fmt::format("{:.17g}", v); }

// Records the outputs of one command and writes manifest.json next to them.
class Manifest {
public:
    Manifest(std::string command, json config) : command_(std::move(command)), config_(std::move(config)) {}

    void add(const fs::path& p) { files_.push_back(p); }
    void tolerance(const std::string& name, double v) { tol_[name] = v; }

    // Fails when a listed output is missing or empty.
    void write(const fs::path& dir) const {
        json out = json::array();
        for (const auto& f : files_) {
            if (!fs::exists(f) || fs::file_size(f) == 0) throw std::runtime_error("output missing or empty: " + f.string());
            out.push_back({{"file", f.filename().string()}, {"bytes", fs::file_size(f)}});
        }
        const json m{{"command", command_},
                     {"config", config_},
                     {"versions", {{"couette", library_version}}},
                     {"tolerances", tol_},
                     {"outputs", out},
                     {"wall_clock_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count()}};
        std::ofstream(dir / "manifest.json") << m.dump(2) << "\n";
    }

private:
    std::string command_;
    json config_;
    json tol_ = json::object();
    std::vector<fs::path> files_;
    std::chrono::steady_clock::time_point t0_ = std::chrono::steady_clock::now();
};

fs::path prepare_dir(const std::string& out) {
    if (out.empty()) throw UsageError("--out is required");
    fs::create_directories(out);
    return fs::path(out);
}

void write_error(const fs::path& dir, const std::string& what) {
    std::ofstream(dir / "error.json") << json{{"error", what}}.dump(2) << "\n";
}

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> v;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            v.push_back(std::stod(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw UsageError("bad number in list: " + item);
        }
    }
    if (v.empty()) throw UsageError("empty list");
    return v;
}

void write_field(const fs::path& p, const HalfPlaneField& f) {
    auto out = fmt::output_file(p.string());
    out.print("X,Y,value\n");
    for (int j = 0; j <= f.grid.NY; ++j)
        for (int i = 0; i < f.grid.NX; ++i) out.print("{},{},{}\n", num(f.grid.X(i)), num(f.grid.Y(j)), num(f.at(i, j)));
}

// ---------------------------------------------------------------------------

struct AiryTableArgs {
    double re_min = -8, re_max = 4, im_min = -4, im_max = 4;
    int n = 25;
    std::string out;
};

int airy_table(const AiryTableArgs& a, const Globals& g) {
    if (a.n < 2 || !(a.re_max > a.re_min) || !(a.im_max > a.im_min)) throw UsageError("airy-table: invalid box");
    if (g.dry_run) return 0;
    std::ostringstream s;
    s << "re_z,im_z,re_Ai,im_Ai,re_Aip,im_Aip\n";
    for (int i = 0; i < a.n; ++i)
        for (int j = 0; j < a.n; ++j) {
            const cplx z{a.re_min + (a.re_max - a.re_min) * i / (a.n - 1), a.im_min + (a.im_max - a.im_min) * j / (a.n - 1)};
            const cplx ai = specfun::airy(z), aip = specfun::airy_deriv(z);
            s << fmt::format("{},{},{},{},{},{}\n", num(z.real()), num(z.imag()), num(ai.real()), num(ai.imag()),
                             num(aip.real()), num(aip.imag()));
        }
    if (a.out.empty()) {
        std::cout << s.str();
        return 0;
    }
    const auto dir = prepare_dir(a.out);
    Manifest m("airy-table", {{"re_min", a.re_min}, {"re_max", a.re_max}, {"im_min", a.im_min}, {"im_max", a.im_max}, {"n", a.n}});
    std::ofstream(dir / "airy_table.csv") << s.str();
    m.add(dir / "airy_table.csv");
    m.write(dir);
    return 0;
}

struct EigenTableArgs {
    double nu = 1.0, k = 1.0;
    int n_max = 16;
    std::string out;
};

int eigen_table(const EigenTableArgs& a, const Globals& g) {
    if (!(a.nu > 0) || a.k == 0.0 || a.n_max < 1) throw UsageError("eigen-table: need nu > 0, k != 0, n-max >= 1");
    if (g.dry_run) return 0;
    std::ostringstream s;
    s << "n,xi_n,re_lambda,im_lambda,re_An2,im_An2\n";
    for (const auto& m : spectral::eigen_modes(a.n_max, a.nu, a.k))
        s << fmt::format("{},{},{},{},{},{}\n", m.n, num(m.xi), num(m.lambda.real()), num(m.lambda.imag()), num(m.A2.real()),
                         num(m.A2.imag()));
    if (a.out.empty()) {
        std::cout << s.str();
        return 0;
    }
    const auto dir = prepare_dir(a.out);
    Manifest m("eigen-table", {{"nu", a.nu}, {"k", a.k}, {"n_max", a.n_max}});
    std::ofstream(dir / "eigen_table.csv") << s.str();
    m.add(dir / "eigen_table.csv");
    m.write(dir);
    return 0;
}

struct EvolveLinearArgs {
    std::string backend = "time-stepping";
    std::string t_list = "1,2,4,8";
    std::string init = "bump";
    int m = 6;
    double LX = 32, LY = 16;
    int NX = 256, NY = 128;
    bool snapshots = false;
    std::string out;
};

// Linear flow of the original equation on a box, field by field.
int evolve_linear(const EvolveLinearArgs& a, const Globals& g) {
    const auto backend = [&] {
        try {
            return resolvent::parse_backend(a.backend);
        } catch (const std::exception&) {
            throw UsageError("unknown backend: " + a.backend);
        }
    }();
    const auto ts = parse_list(a.t_list);
    if (!std::is_sorted(ts.begin(), ts.end()) || !(ts.front() > 0)) throw UsageError("--t-list must be positive and increasing");
    if (a.init != "bump" && a.init != "m2-free") throw UsageError("--init must be bump or m2-free");
    HalfPlaneGrid grid{a.LX, a.LY, a.NX, a.NY};
    if (grid.NX % 2 || grid.NX < 8 || grid.NY < 8) throw UsageError("invalid grid");
    const auto dir = prepare_dir(a.out);
    if (g.dry_run) return 0;
    Manifest man("evolve-linear", {{"backend", a.backend}, {"t_list", ts}, {"init", a.init}, {"m", a.m},
                                   {"LX", a.LX}, {"LY", a.LY}, {"NX", a.NX}, {"NY", a.NY}});
    const auto f0 = a.init == "bump" ? selfsim::normalized_bump(grid, {1.0, 1.0, 1.0, 0.0, 0.0})
                                     : selfsim::m2_free_bumps(grid, {1.0, 1.0, 1.0, 0.0, 0.0}, {1.0, 1.0, 2.0, 0.0, 0.0});
    auto csv = fmt::output_file((dir / "linear.csv").string());
    csv.print("t,L2,L2m,M2,slope_window\n");
    double t_prev = 0, l2_prev = 0;
    for (double t : ts) {
        const auto f = resolvent::evolve_halfplane_linear(f0, t, backend);
        const double l2 = selfsim::lp_norm(f, 2.0);
        const double slope = t_prev > 0 ? std::log(l2 / l2_prev) / std::log(t / t_prev) : std::nan("");
        csv.print("{},{},{},{},{}\n", num(t), num(l2), num(selfsim::weighted_norm(f, a.m)), num(selfsim::moments(f).M2), num(slope));
        if (a.snapshots) {
            const auto p = dir / fmt::format("field_{}.csv", num(t));
            auto o = fmt::output_file(p.string());
            o.print("X,Y,re,im\n");
            for (int j = 0; j <= grid.NY; ++j)
                for (int i = 0; i < grid.NX; ++i) o.print("{},{},{},0\n", num(grid.X(i)), num(grid.Y(j)), num(f.at(i, j)));
            o.close();
            man.add(p);
        }
        t_prev = t;
        l2_prev = l2;
    }
    csv.close();
    man.add(dir / "linear.csv");
    man.write(dir);
    return 0;
}

struct KernelArgs {
    double smax = 36.0;
    int n = 14401;
    int grid = 512;
    int fhat_n = 512;
    std::string out;
};

int kernel_cmd(const KernelArgs& a, const Globals& g) {
    if (a.grid < 16 || a.grid % 8) throw UsageError("--grid must be a multiple of 8, at least 16");
    if (a.smax < 5.0 || a.n < 101 || a.fhat_n < 2) throw UsageError("invalid --smax, --n or --fhat-n");
    const auto dir = prepare_dir(a.out);
    if (g.dry_run) return 0;
    Manifest man("kernel", {{"smax", a.smax}, {"n", a.n}, {"grid", a.grid}, {"fhat_n", a.fhat_n}});
    const double tol_boundary = 1e-3 * g.tol_scale, tol_m2 = 1e-3 * g.tol_scale, tol_h = 1e-6 * g.tol_scale;
    man.tolerance("boundary", tol_boundary);
    man.tolerance("M2", tol_m2);
    man.tolerance("h_residual", tol_h);
    try {
        const auto h = kernel::solve_h(a.smax, std::size_t(a.n));
        HalfPlaneGrid grid;
        grid.NX = a.grid;
        grid.NY = a.grid * 3 / 8;
        auto kp = kernel::build_kernel(grid, h);
        kp.residual = verify::detail::kernel_residual(kp.omega);
        {
            auto o = fmt::output_file((dir / "h.csv").string());
            o.print("s,re_h,im_h\n");
            for (std::size_t j = 0; j < h.h.size(); ++j) {
                const cplx v = h(h.ds * double(j));
                o.print("{},{},{}\n", num(h.ds * double(j)), num(v.real()), num(v.imag()));
            }
        }
        {
            auto o = fmt::output_file((dir / "fhat.csv").string());
            o.print("k,eta,re,im\n");
            for (int i = 0; i < a.fhat_n; ++i)
                for (int j = 0; j < a.fhat_n; ++j) {
                    const double k = -16.0 + 32.0 * i / (a.fhat_n - 1), eta = -16.0 + 32.0 * j / (a.fhat_n - 1);
                    const cplx v = kernel::fhat(h, k, eta);
                    o.print("{},{},{},{}\n", num(k), num(eta), num(v.real()), num(v.imag()));
                }
        }
        write_field(dir / "omega_bar.csv", kp.omega);
        const bool ok = !kp.flagged && kp.boundary_max <= tol_boundary && std::abs(kp.M2 - 1.0) <= tol_m2 && h.residual <= tol_h;
        const json meta{{"M2", kp.M2},
                        {"residual_L", kp.residual},
                        {"boundary_max", kp.boundary_max},
                        {"h_residual", h.residual},
                        {"imag_max", kp.imag_max},
                        {"tail_fraction", kp.tail_fraction},
                        {"oversample", kp.oversample},
                        {"flagged", kp.flagged},
                        {"tolerances", {{"boundary", tol_boundary}, {"M2", tol_m2}, {"h_residual", tol_h}}},
                        {"methods", {{"h", kernel::to_string(h.method)}, {"profile", "oversampled-fourier-slices"}}},
                        {"grid", {{"LX", grid.LX}, {"LY", grid.LY}, {"NX", grid.NX}, {"NY", grid.NY}}},
                        {"pass", ok}};
        std::ofstream(dir / "kernel_meta.json") << meta.dump(2) << "\n";
        for (const char* f : {"h.csv", "fhat.csv", "omega_bar.csv", "kernel_meta.json"}) man.add(dir / f);
        man.write(dir);
        return ok ? 0 : 1;
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        write_error(dir, e.what());
        std::cerr << "kernel: " << e.what() << "\n";
        return 1;
    }
}

// evolve-nonlinear config: nu, m, LX, LY, NX, NY, dtau, tau_end, scheme, init {type, params}, output_every.
selfsim::SimConfig parse_config(const json& j, HalfPlaneField& f0, bool& with_kernel) {
    static const std::set<std::string> keys{"nu", "m", "LX", "LY", "NX", "NY", "dtau", "tau_end", "scheme", "init",
                                            "output_every", "nonlinear", "snapshot_taus", "kernel"};
    if (!j.is_object()) throw UsageError("config must be a JSON object");
    for (const auto& [k, v] : j.items())
        if (!keys.count(k)) throw UsageError("unknown config key: " + k);
    selfsim::SimConfig c;
    try {
        c.nu = j.value("nu", c.nu);
        c.m = j.value("m", c.m);
        c.grid.LX = j.value("LX", c.grid.LX);
        c.grid.LY = j.value("LY", c.grid.LY);
        c.grid.NX = j.value("NX", c.grid.NX);
        c.grid.NY = j.value("NY", c.grid.NY);
        c.dtau = j.value("dtau", c.dtau);
        c.tau_end = j.value("tau_end", c.tau_end);
        c.scheme = selfsim::parse_scheme(j.value("scheme", std::string("rk3")));
        c.output_every = j.value("output_every", c.output_every);
        c.nonlinear = j.value("nonlinear", true);
        c.snapshot_taus = j.value("snapshot_taus", std::vector<double>{});
        with_kernel = j.value("kernel", true);
        c.validate();
        const json init = j.value("init", json{{"type", "bump"}});
        const std::string type = init.value("type", std::string("bump"));
        const json p = init.value("params", json::object());
        const selfsim::Bump b{1.0, p.value("a", 1.0), p.value("b", 1.0), p.value("x0", 0.0), p.value("y0", 0.0)};
        if (type == "bump") {
            f0 = selfsim::normalized_bump(c.grid, b, p.value("M2", 1.0));
        } else if (type == "m2-free") {
            const selfsim::Bump q{1.0, p.value("a2", 1.0), p.value("b2", 2.0), p.value("x2", 0.0), p.value("y2", 0.0)};
            f0 = selfsim::m2_free_bumps(c.grid, b, q);
            const double s = p.value("scale", 1.0);
            for (double& v : f0.v) v *= s;
        } else {
            throw UsageError("unknown init type: " + type);
        }
    } catch (const UsageError&) {
        throw;
    } catch (const std::exception& e) {
        throw UsageError(std::string("invalid config: ") + e.what());
    }
    return c;
}

int evolve_nonlinear(const std::string& config_path, const std::string& out, const Globals& g) {
    std::ifstream in(config_path);
    if (!in) throw UsageError("cannot read config: " + config_path);
    json j;
    try {
        j = json::parse(in);
    } catch (const std::exception& e) {
        throw UsageError(std::string("config is not valid JSON: ") + e.what());
    }
    HalfPlaneField f0;
    bool with_kernel = true;
    const auto c = parse_config(j, f0, with_kernel);
    const auto dir = prepare_dir(out);
    if (g.dry_run) return 0;
    Manifest man("evolve-nonlinear", j);
    std::optional<kernel::KernelProfile> kp;
    if (with_kernel) kp = kernel::build_kernel(c.grid, kernel::solve_h(36.0, 14401));
    const auto r = selfsim::run(c, f0, kp ? &kp->omega : nullptr);
    {
        auto o = fmt::output_file((dir / "diagnostics.csv").string());
        o.print("t,tau,L1,L2,L2m,Linf,M,M1,M2,dist_kernel\n");
        for (const auto& w : r.rows)
            o.print("{},{},{},{},{},{},{},{},{},{}\n", num(w.t), num(w.tau), num(w.L1), num(w.L2), num(w.L2m), num(w.Linf), num(w.M),
                    num(w.M1), num(w.M2), num(w.dist_kernel));
    }
    man.add(dir / "diagnostics.csv");
    for (const auto& s : r.snapshots) {
        const auto p = dir / fmt::format("snap_{:.4f}.csv", s.tau);
        write_field(p, s.field);
        man.add(p);
    }
    man.write(dir);
    if (r.diverged) {
        write_error(dir, r.message);
        std::cerr << "evolve-nonlinear: " << r.message << "\n";
        return 1;
    }
    return 0;
}

int verify_cmd(const std::string& suite, const std::string& out, const Globals& g) {
    const auto& suites = verify::suites();
    if (!suites.count(suite)) throw UsageError("unknown suite: " + suite);
    const auto dir = prepare_dir(out);
    if (g.dry_run) return 0;
    Manifest man("verify", {{"suite", suite}, {"tol_scale", g.tol_scale}, {"seed", g.seed}});
    verify::Context ctx({g.tol_scale, g.seed});
    json crit = json::array();
    bool ok = true;
    for (int id : suites.at(suite)) {
        const auto c = verify::run_criterion(id, ctx);
        json vals = json::object();
        for (const auto& m : c.values) vals[m.name] = m.value;
        json e{{"id", c.id}, {"title", c.title}, {"pass", c.pass}, {"gated", c.gated}, {"values", vals}, {"seconds", c.seconds}};
        if (!c.table.empty()) e["table"] = {{"columns", c.table_header}, {"rows", c.table}};
        crit.push_back(e);
        std::cout << fmt::format("AC{} {} {}\n", c.id, c.pass ? "PASS" : "FAIL", c.title);
        if (c.gated && !c.pass) ok = false;
    }
    const auto p = dir / fmt::format("report_{}.json", suite);
    std::ofstream(p) << json{{"suite", suite}, {"pass", ok}, {"criteria", crit}}.dump(2) << "\n";
    man.add(p);
    man.write(dir);
    return ok ? 0 : 1;
}

// ---------------------------------------------------------------------------
// SVG plots.

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    int col(const std::string& name) const {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return int(i);
        throw UsageError("column not found: " + name);
    }
};

Table read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read " + path);
    Table t;
    std::string line;
    if (!std::getline(in, line) || line.empty()) throw UsageError("empty CSV: " + path);
    std::stringstream hs(line);
    for (std::string c; std::getline(hs, c, ',');) t.header.push_back(c);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> r;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) {
            try {
                r.push_back(std::stod(c));
            } catch (const std::exception&) {
                throw UsageError("malformed CSV value: " + c);
            }
        }
        if (r.size() != t.header.size()) throw UsageError("malformed CSV row: " + line);
        t.rows.push_back(std::move(r));
    }
    if (t.rows.empty()) throw UsageError("CSV has no data rows: " + path);
    return t;
}

// Fixed 640x480 viewport with a 60-pixel margin.
constexpr double W = 640, H = 480, PAD = 60;

std::string svg_open() {
    return fmt::format("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n"
                       "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
                       W, H, W, H);
}

std::string axes(const std::string& xl, const std::string& yl, double x0, double x1, double y0, double y1) {
    std::string s = fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" stroke=\"black\"/>\n", PAD, PAD,
                                W - 2 * PAD, H - 2 * PAD);
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"14\" text-anchor=\"middle\">{}</text>\n", W / 2, H - 15, xl);
    s += fmt::format("<text x=\"15\" y=\"{}\" font-size=\"14\" transform=\"rotate(-90 15 {})\" text-anchor=\"middle\">{}</text>\n",
                     H / 2, H / 2, yl);
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\">{:.4g}</text>\n", PAD, H - PAD + 15, x0);
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{:.4g}</text>\n", W - PAD, H - PAD + 15, x1);
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{:.4g}</text>\n", PAD - 4, H - PAD, y0);
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{:.4g}</text>\n", PAD - 4, PAD + 10, y1);
    return s;
}

std::string line_plot(const Table& t, const std::string& xc, const std::string& yc, bool loglog) {
    const int ix = t.col(xc), iy = t.col(yc);
    std::vector<double> x, y;
    for (const auto& r : t.rows) {
        if (!std::isfinite(r[ix]) || !std::isfinite(r[iy])) continue;
        if (loglog && (r[ix] <= 0 || r[iy] <= 0)) continue;
        x.push_back(loglog ? std::log10(r[ix]) : r[ix]);
        y.push_back(loglog ? std::log10(std::abs(r[iy])) : r[iy]);
    }
    if (x.size() < 2) throw UsageError("not enough plottable points");
    const auto [xa, xb] = std::minmax_element(x.begin(), x.end());
    const auto [ya, yb] = std::minmax_element(y.begin(), y.end());
    const double x0 = *xa, x1 = *xb > *xa ? *xb : *xa + 1, y0 = *ya, y1 = *yb > *ya ? *yb : *ya + 1;
    auto px = [&](double v) { return PAD + (v - x0) / (x1 - x0) * (W - 2 * PAD); };
    auto py = [&](double v) { return H - PAD - (v - y0) / (y1 - y0) * (H - 2 * PAD); };
    std::string s = svg_open();
    s += axes(loglog ? "log10 " + xc : xc, loglog ? "log10 " + yc : yc, x0, x1, y0, y1);
    s += "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) s += fmt::format("{:.2f},{:.2f} ", px(x[i]), py(y[i]));
    s += "\"/>\n";
    const auto fit = fit_line(x, y);
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"crimson\" stroke-dasharray=\"6 4\"/>\n",
                     px(x0), py(fit.intercept + fit.slope * x0), px(x1), py(fit.intercept + fit.slope * x1));
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"13\" fill=\"crimson\">fitted slope {:.4f}</text>\n", PAD + 10, PAD + 20,
                     fit.slope);
    return s + "</svg>\n";
}

std::string heatmap(const Table& t, const std::string& xc, const std::string& yc, const std::string& vc) {
    const int ix = t.col(xc), iy = t.col(yc), iv = t.col(vc);
    std::set<double> xs, ys;
    double vmax = 0;
    for (const auto& r : t.rows) {
        xs.insert(r[ix]);
        ys.insert(r[iy]);
        vmax = std::max(vmax, std::abs(r[iv]));
    }
    if (xs.size() < 2 || ys.size() < 2) throw UsageError("heatmap needs a 2D grid");
    const std::vector<double> X(xs.begin(), xs.end()), Y(ys.begin(), ys.end());
    const double x0 = X.front(), x1 = X.back(), y0 = Y.front(), y1 = Y.back();
    // at most 160 cells per side keeps the file small
    const std::size_t sx = std::max<std::size_t>(1, X.size() / 160), sy = std::max<std::size_t>(1, Y.size() / 160);
    const double cw = (W - 2 * PAD) / double((X.size() + sx - 1) / sx), ch = (H - 2 * PAD) / double((Y.size() + sy - 1) / sy);
    std::map<std::pair<double, double>, double> val;
    for (const auto& r : t.rows) val[{r[ix], r[iy]}] = r[iv];
    std::string s = svg_open();
    for (std::size_t a = 0; a < X.size(); a += sx)
        for (std::size_t b = 0; b < Y.size(); b += sy) {
            const auto it = val.find({X[a], Y[b]});
            const double v = it == val.end() || vmax == 0 ? 0.0 : it->second / vmax;
            // diverging map: blue negative, red positive
            const int c = int(std::lround(255 * (1 - std::min(1.0, std::abs(v)))));
            const std::string col = v >= 0 ? fmt::format("rgb(255,{},{})", c, c) : fmt::format("rgb({},{},255)", c, c);
            s += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n",
                             PAD + double(a / sx) * cw, H - PAD - double(b / sy + 1) * ch, cw + 0.05, ch + 0.05, col);
        }
    s += axes(xc, yc, x0, x1, y0, y1);
    s += fmt::format("<text x=\"{}\" y=\"{}\" font-size=\"13\">max |{}| = {:.4g}</text>\n", PAD + 10, PAD - 10, vc, vmax);
    return s + "</svg>\n";
}

struct PlotArgs {
    std::string in, out, kind = "line", x, y, value = "value";
    bool loglog = false;
};

int plot(const PlotArgs& a, const Globals& g) {
    if (a.kind != "line" && a.kind != "heatmap") throw UsageError("--kind must be line or heatmap");
    if (a.out.empty()) throw UsageError("--out is required");
    const Table t = read_csv(a.in);
    if (g.dry_run) return 0;
    std::string svg;
    if (a.kind == "line") {
        const std::string x = a.x.empty() ? t.header[0] : a.x;
        const std::string y = a.y.empty() ? (t.header.size() > 1 ? t.header[1] : t.header[0]) : a.y;
        svg = line_plot(t, x, y, a.loglog);
    } else {
        svg = heatmap(t, a.x.empty() ? "X" : a.x, a.y.empty() ? "Y" : a.y, a.value);
    }
    const fs::path out(a.out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    std::ofstream(out) << svg;
    Manifest man("plot", {{"in", a.in}, {"kind", a.kind}, {"x", a.x}, {"y", a.y}, {"loglog", a.loglog}});
    man.add(out);
    man.write(out.has_parent_path() ? out.parent_path() : fs::path("."));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Self-similar attractor of shear-perturbed 2D Navier-Stokes: kernels, semigroups and runs"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--threads", g.threads, "worker threads (0 = all cores)");
    app.add_option("--tol-scale", g.tol_scale, "multiplies every tolerance")->check(CLI::PositiveNumber);
    app.add_option("--seed", g.seed, "seed for randomized checks");
    app.add_flag("--dry-run", g.dry_run, "validate arguments without computing");

    AiryTableArgs at;
    auto* c_at = app.add_subcommand("airy-table", "Ai and Ai' on a rectangular grid in the complex plane");
    c_at->add_option("--re-min", at.re_min);
    c_at->add_option("--re-max", at.re_max);
    c_at->add_option("--im-min", at.im_min);
    c_at->add_option("--im-max", at.im_max);
    c_at->add_option("--n", at.n, "points per axis");
    c_at->add_option("--out", at.out, "output directory (stdout when omitted)");

    EigenTableArgs et;
    auto* c_et = app.add_subcommand("eigen-table", "eigenvalues and normalizations of the complex Airy operator");
    c_et->add_option("--nu", et.nu);
    c_et->add_option("--k", et.k);
    c_et->add_option("--n-max", et.n_max);
    c_et->add_option("--out", et.out, "output directory (stdout when omitted)");

    EvolveLinearArgs el;
    auto* c_el = app.add_subcommand("evolve-linear", "linear flow of bump data in original variables");
    c_el->add_option("--backend", el.backend, "time-stepping | eigen-expansion | t-decomposition");
    c_el->add_option("--t-list", el.t_list, "comma-separated output times");
    c_el->add_option("--init", el.init, "bump | m2-free");
    c_el->add_option("--m", el.m, "weight exponent of L2(m)");
    c_el->add_option("--LX", el.LX);
    c_el->add_option("--LY", el.LY);
    c_el->add_option("--NX", el.NX);
    c_el->add_option("--NY", el.NY);
    c_el->add_flag("--snapshots", el.snapshots, "write field_<t>.csv at every time");
    c_el->add_option("--out", el.out, "output directory");

    KernelArgs ka;
    auto* c_k = app.add_subcommand("kernel", "boundary density, Fourier kernel and attractor profile");
    c_k->add_option("--smax", ka.smax, "range of the boundary density");
    c_k->add_option("--n", ka.n, "grid points of the boundary density");
    c_k->add_option("--grid", ka.grid, "NX of the profile grid (NY = 3 NX / 8)");
    c_k->add_option("--fhat-n", ka.fhat_n, "points per axis of the Fourier kernel table");
    c_k->add_option("--out", ka.out, "output directory");

    std::string cfg, nl_out;
    auto* c_nl = app.add_subcommand("evolve-nonlinear", "self-similar vorticity run from a JSON config");
    c_nl->add_option("--config", cfg, "config.json")->required();
    c_nl->add_option("--out", nl_out, "output directory");

    std::string suite, v_out = ".";
    auto* c_v = app.add_subcommand("verify", "run an acceptance suite and write report_<suite>.json");
    c_v->add_option("suite", suite, "identity | decay-linear | decay-nonlinear | conjecture | appendixB")->required();
    c_v->add_option("--out", v_out, "output directory");

    PlotArgs pa;
    auto* c_p = app.add_subcommand("plot", "render a CSV as a deterministic SVG");
    c_p->add_option("input", pa.in, "CSV file")->required();
    c_p->add_option("--kind", pa.kind, "line | heatmap");
    c_p->add_option("--x", pa.x, "x column");
    c_p->add_option("--y", pa.y, "y column");
    c_p->add_option("--value", pa.value, "value column of a heatmap");
    c_p->add_flag("--loglog", pa.loglog, "log-log axes");
    c_p->add_option("--out", pa.out, "output SVG");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }
    thread_setting() = g.threads;
    try {
        if (*c_at) return airy_table(at, g);
        if (*c_et) return eigen_table(et, g);
        if (*c_el) return evolve_linear(el, g);
        if (*c_k) return kernel_cmd(ka, g);
        if (*c_nl) return evolve_nonlinear(cfg, nl_out, g);
        if (*c_v) {
            const int rc = verify_cmd(suite, v_out, g);
            return suite == "conjecture" ? 0 : rc;
        }
        if (*c_p) return plot(pa, g);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n" << app.help();
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}

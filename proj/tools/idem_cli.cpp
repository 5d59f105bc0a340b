// idem — analyze idempotent channels, compute emulation capacities,
// synthesize encoder/decoder pairs, certify converse bounds, and audit
// approximate algebra inclusions.
//
// Exit codes: 0 success, 1 regression mismatch, 2 non-idempotent input,
// 3 infeasible emulation, 64 I/O or usage error, 65 numeric failure,
// 66 budget exceeded.

#include "idem/idem.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRegression = 1;
constexpr int kExitNotIdempotent = 2;
constexpr int kExitInfeasible = 3;
constexpr int kExitIo = 64;
constexpr int kExitNumeric = 65;
constexpr int kExitBudget = 66;

// All human-readable floating output uses 12 significant digits.
std::string fmt12(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", x);
    return buf;
}

bool close_to(double expected, double computed, double tolerance) {
    if (std::isinf(expected) || std::isinf(computed)) {
        return std::isinf(expected) && std::isinf(computed) &&
               (expected > 0) == (computed > 0);
    }
    return std::abs(expected - computed) <= tolerance;
}

int run_guarded(const std::function<int()>& action) {
    try {
        return action();
    } catch (const idem::IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const idem::BudgetError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitBudget;
    } catch (const idem::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    } catch (const nlohmann::json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumeric;
    }
}

// Shared gate: subcommands reject non-idempotent channel inputs with exit 2.
std::optional<int> reject_non_idempotent(const idem::Channel& c,
                                         const std::string& label,
                                         const idem::ToleranceConfig& tol) {
    const idem::EqualityResult eq = idem::is_idempotent(c, tol);
    if (!eq.equal) {
        std::cerr << label << " is not idempotent: Choi residual "
                  << fmt12(eq.residual) << "\n";
        return kExitNotIdempotent;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Subcommands
// ---------------------------------------------------------------------------

int cmd_analyze(const std::string& path, bool as_json, const idem::RunConfig& cfg) {
    const idem::ChannelFile file = idem::read_channel_file(path);
    if (const auto rc = reject_non_idempotent(file.channel, path, cfg.tolerances)) {
        return *rc;
    }
    const idem::ReducedChannel reduced = idem::reduce(file.channel, cfg.tolerances);
    const idem::AlgebraBasis algebra =
        idem::fixed_point_algebra(reduced, cfg.tolerances);
    const idem::IdempotentDecomposition dec =
        idem::decompose(reduced, algebra, cfg.tolerances, cfg.seed);

    if (as_json) {
        nlohmann::json report = idem::decomposition_report_to_json(dec);
        report["ambient_dim"] = file.channel.dim_in();
        report["support_dim"] = reduced.support.rank;
        if (file.expected_shape) {
            report["expected_shape_match"] = (dec.shape == *file.expected_shape);
        }
        std::cout << report.dump(2) << "\n";
    } else {
        std::cout << "shape: " << idem::to_string(dec.shape) << "\n";
        std::cout << "multiplicities: (";
        for (std::size_t i = 0; i < dec.multiplicities.size(); ++i) {
            std::cout << (i ? "," : "") << dec.multiplicities[i];
        }
        std::cout << ")\n";
        std::cout << "support: " << reduced.support.rank << " of "
                  << file.channel.dim_in() << "\n";
        std::cout << "residual: " << fmt12(dec.residual) << "\n";
        if (file.expected_shape) {
            std::cout << "expected shape "
                      << (dec.shape == *file.expected_shape ? "matches"
                                                            : "DOES NOT match")
                      << "\n";
        }
    }
    return kExitOk;
}

int cmd_capacity(const std::string& path_f, const std::string& path_g,
                 const std::string& curve_path, const idem::RunConfig& cfg) {
    const idem::ChannelFile file_f = idem::read_channel_file(path_f);
    const idem::ChannelFile file_g = idem::read_channel_file(path_g);
    if (const auto rc = reject_non_idempotent(file_f.channel, path_f, cfg.tolerances)) {
        return *rc;
    }
    if (const auto rc = reject_non_idempotent(file_g.channel, path_g, cfg.tolerances)) {
        return *rc;
    }
    const idem::ShapeVector lam_f =
        idem::shape_of(file_f.channel, cfg.tolerances, cfg.seed);
    const idem::ShapeVector lam_g =
        idem::shape_of(file_g.channel, cfg.tolerances, cfg.seed + 1);

    idem::CapacityOptions opts;
    opts.grid_points = cfg.grid_points;
    const idem::CapacityReport report = idem::capacity(lam_f, lam_g, opts);

    nlohmann::json out = idem::capacity_report_to_json(report);
    out["shape_emulated"] = lam_f.entries;
    out["shape_emulator"] = lam_g.entries;
    std::cout << out.dump(2) << "\n";
    if (!curve_path.empty()) {
        idem::write_text_file(curve_path, idem::capacity_curve_to_csv(report));
    }
    return kExitOk;
}

int cmd_emulate(const std::string& path_f, const std::string& path_g, int k, int n,
                const std::string& prefix, const std::string& plan_path,
                const idem::RunConfig& cfg) {
    const idem::ChannelFile file_f = idem::read_channel_file(path_f);
    const idem::ChannelFile file_g = idem::read_channel_file(path_g);
    if (const auto rc = reject_non_idempotent(file_f.channel, path_f, cfg.tolerances)) {
        return *rc;
    }
    if (const auto rc = reject_non_idempotent(file_g.channel, path_g, cfg.tolerances)) {
        return *rc;
    }
    idem::EmulationOptions opts;
    opts.tol = cfg.tolerances;
    opts.seed = cfg.seed;
    opts.dim_budget = cfg.budget_dim;
    const std::optional<idem::EmulationKit> kit =
        idem::synthesize_emulation(file_f.channel, file_g.channel, k, n, opts);
    if (!kit) {
        std::cout << "infeasible: the fixed-point algebra of F^" << k
                  << " does not embed into the fixed-point algebra of G^" << n
                  << "\n";
        return kExitInfeasible;
    }
    idem::ChannelFile enc{idem::kChannelSchemaVersion, kit->encoder, "encoder", {}};
    idem::ChannelFile dec{idem::kChannelSchemaVersion, kit->decoder, "decoder", {}};
    idem::write_channel_file(prefix + ".encoder.json", enc);
    idem::write_channel_file(prefix + ".decoder.json", dec);
    if (!plan_path.empty()) {
        idem::write_text_file(plan_path, idem::plan_to_csv(kit->plan));
    }
    std::cout << "wrote " << prefix << ".encoder.json and " << prefix
              << ".decoder.json\n";
    std::cout << "residual: " << fmt12(kit->residual) << "\n";
    return kExitOk;
}

int cmd_bound(const std::string& path_f, const std::string& path_g, int k, int n,
              const std::string& enc_path, const std::string& dec_path,
              const idem::RunConfig& cfg) {
    const idem::ChannelFile file_f = idem::read_channel_file(path_f);
    const idem::ChannelFile file_g = idem::read_channel_file(path_g);
    if (const auto rc = reject_non_idempotent(file_f.channel, path_f, cfg.tolerances)) {
        return *rc;
    }
    if (const auto rc = reject_non_idempotent(file_g.channel, path_g, cfg.tolerances)) {
        return *rc;
    }
    const idem::ShapeVector lam_f =
        idem::shape_of(file_f.channel, cfg.tolerances, cfg.seed);
    const idem::ShapeVector lam_g =
        idem::shape_of(file_g.channel, cfg.tolerances, cfg.seed + 1);
    nlohmann::json out{
        {"k", k},
        {"n", n},
        {"theoretical_floor",
         idem::converse_error_floor(idem::tensor_power(lam_f, k),
                                    idem::tensor_power(lam_g, n))},
    };
    if (!enc_path.empty() && !dec_path.empty()) {
        const idem::Channel encoder = idem::read_channel_file(enc_path).channel;
        const idem::Channel decoder = idem::read_channel_file(dec_path).channel;
        idem::CertificateOptions copts;
        copts.tol = cfg.tolerances;
        copts.seed = cfg.seed;
        const idem::ConverseCertificate cert = idem::converse_certificate(
            file_f.channel, file_g.channel, encoder, decoder, k, n, copts);
        out["gap_p1"] = cert.gap_p1;
        out["gap_pinf"] = cert.gap_pinf;
        out["certified_lower_bound"] = cert.certified_lower_bound;
        out["theoretical_floor"] = cert.theoretical_floor;
    }
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

int cmd_audit(const std::string& path_f, const std::string& path_g,
              const std::string& enc_path, const std::string& dec_path,
              idem::Index samples, const idem::RunConfig& cfg) {
    const idem::ChannelFile file_f = idem::read_channel_file(path_f);
    const idem::ChannelFile file_g = idem::read_channel_file(path_g);
    if (const auto rc = reject_non_idempotent(file_f.channel, path_f, cfg.tolerances)) {
        return *rc;
    }
    if (const auto rc = reject_non_idempotent(file_g.channel, path_g, cfg.tolerances)) {
        return *rc;
    }
    const idem::Channel encoder = idem::read_channel_file(enc_path).channel;
    const idem::Channel decoder = idem::read_channel_file(dec_path).channel;
    const idem::InclusionReport report = idem::delta_inclusion_report(
        file_f.channel, file_g.channel, encoder, decoder, samples, cfg.seed,
        cfg.tolerances);

    nlohmann::json out = idem::inclusion_report_to_json(report, cfg.seed);
    const double eq = cfg.tolerances.eq_tol;
    out["unitality_ok"] = report.unitality_residual <= eq;
    out["norm_preservation_ok"] =
        report.norm_preservation_worst <= report.delta_cb + eq;
    out["multiplicativity_ok"] =
        report.multiplicativity_worst <= report.theoretical_mult_bound + eq;
    out["delta_max"] = cfg.delta_max;
    out["delta_within_budget"] = report.delta_cb <= cfg.delta_max;
    std::cout << out.dump(2) << "\n";
    return kExitOk;
}

// ---------------------------------------------------------------------------
// Regression table
// ---------------------------------------------------------------------------

struct RegressionRow {
    std::string name;
    std::string expected;
    std::string computed;
    bool pass = false;
};

void add_value_row(std::vector<RegressionRow>& rows, const std::string& name,
                   double expected, double computed, double tolerance) {
    rows.push_back(
        {name, fmt12(expected), fmt12(computed), close_to(expected, computed, tolerance)});
}

// Block-channel fixture with the given block dimensions, multiplicities all 1.
idem::Channel shape_fixture(const std::vector<idem::Index>& dims,
                            std::uint64_t seed, const idem::ToleranceConfig& tol) {
    idem::BlockSpec spec;
    idem::Index total = 0;
    for (idem::Index d : dims) {
        spec.blocks.push_back({d, 1, idem::identity(1)});
        total += d;
    }
    spec.ambient_dim = total;
    return idem::make_block_idempotent(spec, seed, tol);
}

int cmd_examples(const idem::RunConfig& cfg) {
    std::vector<RegressionRow> rows;
    const idem::ToleranceConfig& tol = cfg.tolerances;
    idem::CapacityOptions copts;
    copts.grid_points = cfg.grid_points;
    copts.keep_curve = false;

    // --- shapes (5,3) vs (10,3,1,1): interior minimizer ---------------------
    {
        const idem::Channel f = shape_fixture({5, 3}, cfg.seed, tol);
        const idem::Channel g = shape_fixture({10, 3, 1, 1}, cfg.seed + 1, tol);
        const idem::ShapeVector lam_f = idem::shape_of(f, tol, cfg.seed + 2);
        const idem::ShapeVector lam_g = idem::shape_of(g, tol, cfg.seed + 3);
        rows.push_back({"shape recovery (5,3)", "(5,3)", idem::to_string(lam_f),
                        lam_f == idem::make_shape({5, 3})});
        rows.push_back({"shape recovery (10,3,1,1)", "(10,3,1,1)",
                        idem::to_string(lam_g),
                        lam_g == idem::make_shape({10, 3, 1, 1})});

        const idem::CapacityReport fwd = idem::capacity(lam_f, lam_g, copts);
        add_value_row(rows, "capacity (5,3) from (10,3,1,1)", 1.29916, fwd.value,
                      1e-4);
        add_value_row(rows, "  argmin p (interior)", 1.15401, fwd.argmin_p, 1e-3);

        const idem::CapacityReport rev = idem::capacity(lam_g, lam_f, copts);
        add_value_row(rows, "capacity (10,3,1,1) from (5,3)",
                      std::log(5.0) / std::log(10.0), rev.value, 1e-9);
        add_value_row(rows, "  argmin p", idem::kInfinity, rev.argmin_p, 0.0);
        add_value_row(rows, "  reciprocal rate", std::log(10.0) / std::log(5.0),
                      1.0 / rev.value, 1e-9);
        rows.push_back({"  non-reversibility", "product != 1",
                        fmt12(fwd.value * rev.value),
                        std::abs(fwd.value * rev.value - 1.0) > 1e-3});
    }

    // --- identity vs two-qubit-block shape (2,2) ----------------------------
    {
        const idem::Channel f = idem::identity_channel(4);
        const idem::Channel g = shape_fixture({2, 2}, cfg.seed + 4, tol);
        const idem::ShapeVector lam_f = idem::shape_of(f, tol, cfg.seed + 5);
        const idem::ShapeVector lam_g = idem::shape_of(g, tol, cfg.seed + 6);
        rows.push_back({"shape recovery Id_4", "(4)", idem::to_string(lam_f),
                        lam_f == idem::make_shape({4})});

        const idem::CapacityReport fwd = idem::capacity(lam_f, lam_g, copts);
        const idem::CapacityReport rev = idem::capacity(lam_g, lam_f, copts);
        add_value_row(rows, "capacity Id_4 from (2,2)", 0.5, fwd.value, 1e-9);
        add_value_row(rows, "capacity (2,2) from Id_4", 1.0, rev.value, 1e-9);
        rows.push_back({"  non-reversibility", "product != 1",
                        fmt12(fwd.value * rev.value),
                        std::abs(fwd.value * rev.value - 1.0) > 1e-3});
    }

    // --- closed-form table rows on random shapes -----------------------------
    {
        idem::Rng rng(cfg.seed + 10);
        const auto random_shape = [&](bool force_nontrivial) {
            const idem::Index len = 1 + static_cast<idem::Index>(rng.integer() % 4);
            std::vector<idem::Index> entries(static_cast<std::size_t>(len));
            for (idem::Index& e : entries) {
                e = 1 + static_cast<idem::Index>(rng.integer() % 6);
            }
            if (force_nontrivial) {
                entries.front() =
                    std::max<idem::Index>(entries.front(), 2);
            }
            return idem::make_shape(std::move(entries));
        };
        const auto random_d = [&]() {
            return 2 + static_cast<idem::Index>(rng.integer() % 7);
        };
        const auto ones = [](idem::Index count) {
            return idem::make_shape(std::vector<idem::Index>(
                static_cast<std::size_t>(count), 1));
        };

        for (int i = 0; i < 3; ++i) {
            {  // emulated channel = Id_d
                const idem::Index d = random_d();
                const idem::ShapeVector lam = random_shape(false);
                const double closed = idem::capacity_closed_form(
                    idem::TableRow::emulated_identity, lam, d);
                const double general =
                    idem::capacity(idem::make_shape({d}), lam, copts).value;
                add_value_row(rows,
                              "table row Id_d emulated, d=" + std::to_string(d) +
                                  " lam=" + idem::to_string(lam),
                              closed, general, 1e-9);
            }
            {  // emulator = Id_d
                const idem::Index d = random_d();
                const idem::ShapeVector lam = random_shape(true);
                const double closed = idem::capacity_closed_form(
                    idem::TableRow::emulator_identity, lam, d);
                const double general =
                    idem::capacity(lam, idem::make_shape({d}), copts).value;
                add_value_row(rows,
                              "table row Id_d emulator, d=" + std::to_string(d) +
                                  " lam=" + idem::to_string(lam),
                              closed, general, 1e-9);
            }
            {  // emulated channel = Delta_d
                const idem::Index d = random_d();
                const idem::ShapeVector lam = random_shape(false);
                const double closed = idem::capacity_closed_form(
                    idem::TableRow::emulated_dephasing, lam, d);
                const double general = idem::capacity(ones(d), lam, copts).value;
                add_value_row(rows,
                              "table row Delta_d emulated, d=" + std::to_string(d) +
                                  " lam=" + idem::to_string(lam),
                              closed, general, 1e-9);
            }
            {  // emulator = Delta_d, non-uniform shape
                const idem::Index d = random_d();
                const idem::ShapeVector lam = random_shape(true);
                const double closed = idem::capacity_closed_form(
                    idem::TableRow::emulator_dephasing, lam, d);
                const double general = idem::capacity(lam, ones(d), copts).value;
                add_value_row(rows,
                              "table row Delta_d emulator, d=" + std::to_string(d) +
                                  " lam=" + idem::to_string(lam),
                              closed, general, 1e-9);
            }
            {  // emulator = Delta_d, all-ones shape
                const idem::Index d = random_d();
                const idem::Index count =
                    2 + static_cast<idem::Index>(rng.integer() % 3);
                const idem::ShapeVector lam = ones(count);
                const double closed = idem::capacity_closed_form(
                    idem::TableRow::emulator_dephasing_uniform, lam, d);
                const double general = idem::capacity(lam, ones(d), copts).value;
                add_value_row(rows,
                              "table row Delta_d emulator uniform, d=" +
                                  std::to_string(d) + " lam=" + idem::to_string(lam),
                              closed, general, 1e-9);
            }
        }
    }

    std::size_t width = 0;
    for (const RegressionRow& r : rows) width = std::max(width, r.name.size());
    int failures = 0;
    for (const RegressionRow& r : rows) {
        std::string name = r.name;
        name.resize(width, ' ');
        std::cout << name << "  expected " << r.expected << "  computed "
                  << r.computed << "  " << (r.pass ? "pass" : "FAIL") << "\n";
        if (!r.pass) ++failures;
    }
    std::cout << rows.size() - static_cast<std::size_t>(failures) << "/"
              << rows.size() << " rows pass\n";
    return failures == 0 ? kExitOk : kExitRegression;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"idempotent channel structure, capacity, and emulation toolkit"};
    app.require_subcommand(1);

    double tol_flag = 1e-8;
    idem::RunConfig cfg;
    app.add_option("--tol", tol_flag,
                   "matrix equality tolerance; rank tolerance = tol/10, "
                   "cluster tolerance = min(100*tol, 0.1)")
        ->envname("IDEM_TOL")
        ->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.seed, "seed for every randomized routine")
        ->envname("IDEM_SEED");
    app.add_option("--grid", cfg.grid_points, "rate-curve grid points")
        ->envname("IDEM_GRID")
        ->check(CLI::Range(3, 1 << 20));
    app.add_option("--delta-max", cfg.delta_max, "inclusion budget for audits")
        ->envname("IDEM_DELTA_MAX")
        ->check(CLI::PositiveNumber);
    app.add_option("--budget", cfg.budget_dim,
                   "largest tensor-power dimension emulation may build")
        ->envname("IDEM_BUDGET")
        ->check(CLI::Range(2, 256));

    std::function<int()> action;

    // analyze
    std::string analyze_path;
    bool analyze_json = false;
    CLI::App* analyze =
        app.add_subcommand("analyze", "decompose an idempotent channel");
    analyze->add_option("channel", analyze_path, "channel JSON file")->required();
    analyze->add_flag("--json", analyze_json, "emit a JSON report");
    analyze->callback(
        [&]() { action = [&]() { return cmd_analyze(analyze_path, analyze_json, cfg); }; });

    // capacity
    std::string cap_f, cap_g, cap_curve;
    CLI::App* capacity = app.add_subcommand(
        "capacity", "emulation capacity of F (emulated) from copies of G");
    capacity->add_option("channel_f", cap_f, "emulated channel file")->required();
    capacity->add_option("channel_g", cap_g, "emulator channel file")->required();
    capacity->add_option("--curve", cap_curve, "write the rate curve CSV here");
    capacity->callback(
        [&]() { action = [&]() { return cmd_capacity(cap_f, cap_g, cap_curve, cfg); }; });

    // emulate
    std::string emu_f, emu_g, emu_prefix = "emulation", emu_plan;
    int emu_k = 1, emu_n = 1;
    CLI::App* emulate = app.add_subcommand(
        "emulate", "synthesize encoder/decoder with F^k = D G^n E");
    emulate->add_option("channel_f", emu_f, "emulated channel file")->required();
    emulate->add_option("channel_g", emu_g, "emulator channel file")->required();
    emulate->add_option("-k,--copies", emu_k, "copies of F emulated")
        ->check(CLI::PositiveNumber);
    emulate->add_option("-n,--uses", emu_n, "copies of G consumed")
        ->check(CLI::PositiveNumber);
    emulate->add_option("--out-prefix", emu_prefix, "output file prefix");
    emulate->add_option("--plan", emu_plan, "write the embedding plan CSV here");
    emulate->callback([&]() {
        action = [&]() {
            return cmd_emulate(emu_f, emu_g, emu_k, emu_n, emu_prefix, emu_plan, cfg);
        };
    });

    // bound
    std::string bnd_f, bnd_g, bnd_enc, bnd_dec;
    int bnd_k = 1, bnd_n = 1;
    CLI::App* bound = app.add_subcommand(
        "bound", "converse error floor, plus witness gaps for a given attempt");
    bound->add_option("channel_f", bnd_f, "emulated channel file")->required();
    bound->add_option("channel_g", bnd_g, "emulator channel file")->required();
    bound->add_option("-k,--copies", bnd_k, "copies of F emulated")
        ->check(CLI::PositiveNumber);
    bound->add_option("-n,--uses", bnd_n, "copies of G consumed")
        ->check(CLI::PositiveNumber);
    bound->add_option("--encoder", bnd_enc, "encoder channel file");
    bound->add_option("--decoder", bnd_dec, "decoder channel file");
    bound->callback([&]() {
        action = [&]() {
            return cmd_bound(bnd_f, bnd_g, bnd_k, bnd_n, bnd_enc, bnd_dec, cfg);
        };
    });

    // audit
    std::string aud_f, aud_g, aud_enc, aud_dec;
    idem::Index aud_samples = 200;
    CLI::App* audit = app.add_subcommand(
        "audit", "delta-inclusion audit of an emulation attempt");
    audit->add_option("channel_f", aud_f, "emulated (reduced) channel file")
        ->required();
    audit->add_option("channel_g", aud_g, "emulator (reduced) channel file")
        ->required();
    audit->add_option("encoder", aud_enc, "encoder channel file")->required();
    audit->add_option("decoder", aud_dec, "decoder channel file")->required();
    audit->add_option("--samples", aud_samples, "algebra samples to draw")
        ->check(CLI::Range(1, 100000));
    audit->callback([&]() {
        action = [&]() {
            return cmd_audit(aud_f, aud_g, aud_enc, aud_dec, aud_samples, cfg);
        };
    });

    // examples
    CLI::App* examples = app.add_subcommand(
        "examples", "reproduce the reference capacities and closed forms");
    examples->callback([&]() { action = [&]() { return cmd_examples(cfg); }; });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitIo;
    }

    cfg.tolerances.eq_tol = tol_flag;
    cfg.tolerances.rank_tol = tol_flag / 10.0;
    cfg.tolerances.cluster_tol = std::min(tol_flag * 100.0, 0.1);
    try {
        cfg.validate();
    } catch (const idem::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
    }

    return run_guarded(action);
}

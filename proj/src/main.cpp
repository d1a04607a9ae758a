/* Command line front end.
 *
 *   cdx run <config.json>   solve a scenario config, write CSV + JSON reports
 *   cdx selftest            algebra / operator / line-integral invariant suites
 *   cdx table <r>           print the basis multiplication table of level r
 *
 * Exit codes for run: 0 success, 2 constraint or decay check failed,
 * 3 singular dressing system, 4 config or validation error.
 * CDX_THREADS caps solver parallelism.
 */

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cdx/cd_number.hpp"
#include "cdx/dressing.hpp"
#include "cdx/errors.hpp"
#include "cdx/line_integral.hpp"
#include "cdx/operator_algebra.hpp"
#include "cdx/report_io.hpp"
#include "cdx/residual.hpp"

namespace {

using nlohmann::json;

/* ------------------------------ config ---------------------------------- */

cdx::CDMatrix parse_amp(const json& a, int level, int s) {
    cdx::CDMatrix m(level, s);
    if (a.is_number()) {
        m.at(0, 0, 0) = a.get<double>();
        return m;
    }
    if (a.is_object()) {
        m.at(0, 0, a.at("component").get<int>()) = a.at("value").get<double>();
        return m;
    }
    if (a.is_array()) {
        for (const auto& e : a)
            m.at(e.value("row", 0), e.value("col", 0), e.value("component", 0)) =
                e.at("value").get<double>();
        return m;
    }
    throw cdx::ConfigError("mode amp must be a number, {component, value} or an entry list");
}

cdx::SigmaSpec parse_sigma(const json& sg, int level, int slot) {
    cdx::SigmaSpec s;
    s.level = level;
    s.slot = slot;
    s.psi = sg.at("psi").get<std::vector<double>>();
    if (sg.contains("xi")) {
        s.xi = sg.at("xi").get<std::vector<int>>();
    } else {
        s.xi.resize(s.psi.size());
        for (size_t j = 0; j < s.xi.size(); ++j) s.xi[j] = static_cast<int>(j);
    }
    return s;
}

struct RunConfig {
    cdx::Scenario sc;
    std::vector<int> refine;
    std::string run_id;
    std::string csv_path, json_path;
    unsigned seed = 7;
    bool neumann_check = false;
};

std::string stem_of(const std::string& path) {
    const size_t slash = path.find_last_of("/\\");
    const std::string base = slash == std::string::npos ? path : path.substr(slash + 1);
    const size_t dot = base.find_last_of('.');
    return dot == std::string::npos ? base : base.substr(0, dot);
}

RunConfig parse_config(const std::string& path, const std::string& out_dir) {
    json j;
    try {
        j = json::parse(cdx::read_text_file(path));
    } catch (const json::exception& e) {
        throw cdx::ConfigError(std::string("config parse: ") + e.what());
    }

    try {
        if (j.value("schema_version", -1) != cdx::kReportSchemaVersion)
            throw cdx::ConfigError("config schema_version must be " +
                                   std::to_string(cdx::kReportSchemaVersion));

        RunConfig rc;
        cdx::Scenario& sc = rc.sc;
        sc.equation = j.at("equation").get<std::string>();
        sc.level = j.at("level").get<int>();
        sc.s = j.value("s", 1);
        sc.p = j.value("p", 1.0);

        sc.sx = parse_sigma(j.at("sigma"), sc.level, 0);
        sc.sy = sc.sx.with_slot(1);
        sc.st = j.contains("time_sigma") ? parse_sigma(j.at("time_sigma"), sc.level, 2)
                                         : sc.sx.with_slot(2);

        for (const auto& jm : j.at("modes")) {
            cdx::ModeSpec m;
            m.kappa = jm.at("kappa").get<double>();
            m.amp = parse_amp(jm.at("amp"), sc.level, sc.s);
            if (jm.contains("c")) {
                m.c = jm.at("c").get<double>();
                m.solve_c = false;
            }
            sc.modes.push_back(std::move(m));
        }

        const json& g = j.at("grid");
        sc.x_min = g.at("x_min").get<double>();
        sc.x_max = g.at("x_max").get<double>();
        sc.nx = g.at("nx").get<int>();
        sc.ny = g.value("ny", sc.ny);
        sc.patch_center = g.value("patch_center", 0.0);
        sc.ndelta = g.value("ndelta", sc.ndelta);
        sc.z_max = g.at("z_max").get<double>();
        sc.nz = g.at("nz").get<int>();
        sc.nt = g.value("nt", sc.nt);
        sc.ht = g.value("ht", sc.ht);
        sc.t_center = g.value("t_center", 0.0);

        sc.eps_tail = j.value("eps_tail", 1e-8);
        sc.constraint_rel = j.value("constraint_rel", 1e-2);
        const std::string quad = j.value("quadrature", "simpson");
        if (quad == "simpson")
            sc.rule = cdx::QuadRule::Simpson;
        else if (quad == "trapezoid")
            sc.rule = cdx::QuadRule::Trapezoid;
        else
            throw cdx::ConfigError("quadrature must be simpson or trapezoid");

        rc.refine = j.value("refine", std::vector<int>{sc.nx});
        if (rc.refine.empty()) rc.refine = {sc.nx};
        if (rc.refine.front() != sc.nx)
            throw cdx::ConfigError("refine[0] must equal grid.nx");

        rc.seed = j.value("seed", 7u);
        rc.neumann_check = j.value("neumann_check", false);
        rc.run_id = j.value("run_id", stem_of(path));

        const std::string dir = out_dir.empty() ? "." : out_dir;
        rc.csv_path = dir + "/" + rc.run_id + "_report.csv";
        rc.json_path = dir + "/" + rc.run_id + "_report.json";
        if (j.contains("output")) {
            const json& o = j.at("output");
            if (o.contains("csv")) rc.csv_path = dir + "/" + o.at("csv").get<std::string>();
            if (o.contains("json")) rc.json_path = dir + "/" + o.at("json").get<std::string>();
        }
        return rc;
    } catch (const json::exception& e) {
        throw cdx::ConfigError(std::string("config field: ") + e.what());
    }
}

cdx::SolveOptions solve_options(const RunConfig& rc) {
    cdx::SolveOptions opt;
    opt.neumann_check = rc.neumann_check;
    if (const char* env = std::getenv("CDX_THREADS")) {
        const int t = std::atoi(env);
        if (t >= 1) opt.threads = t;
    }
    return opt;
}

/* -------------------------------- run ----------------------------------- */

int cmd_run(const std::string& config_path, const std::string& out_dir) {
    RunConfig rc;
    try {
        rc = parse_config(config_path, out_dir);
        rc.sc.validate(true);
        cdx::solve_dispersion(rc.sc);
    } catch (const cdx::Error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 4;
    }

    const cdx::SolveOptions opt = solve_options(rc);

    try {
        const cdx::ConstraintReport cons = cdx::check_constraints(rc.sc);
        std::cerr << "seed constraints: |L1 F|/|F| = " << cons.l1_rel
                  << ", |L2 F|/|F| = " << cons.l2_rel << " (limit " << rc.sc.constraint_rel
                  << ")\n";
        if (!cons.pass) {
            std::cerr << "constraint check failed\n";
            return 2;
        }

        const cdx::DressingResult dr = cdx::solve_dressing(rc.sc, opt);
        std::cerr << "solved: closure " << cdx::closure_name(dr.stats.closure) << ", rcond_min "
                  << dr.stats.rcond_min << ", tail_ratio " << dr.stats.tail_ratio << ", "
                  << dr.stats.solves << " systems\n";

        std::vector<cdx::ResidualRow> rows;
        if (rc.refine.size() <= 1)
            rows = cdx::residual_suite(rc.sc, dr);
        else
            rows = cdx::refine_and_estimate(rc.sc, rc.refine, opt);

        cdx::write_text_file(rc.csv_path, cdx::rows_to_csv(rows));
        cdx::write_text_file(rc.json_path,
                             cdx::report_to_json(rc.run_id, rc.sc, dr.stats, rows));

        double worst = 0.0;
        for (const auto& r : rows) worst = std::max(worst, r.res_linf);
        std::cout << rc.run_id << ": " << rows.size() << " residual rows, worst L_inf " << worst
                  << ", reports " << rc.csv_path << " " << rc.json_path << "\n";
        return 0;
    } catch (const cdx::SingularOperator& e) {
        std::cerr << "singular dressing system: " << e.what() << "\n";
        return 3;
    } catch (const cdx::TailNotDecayed& e) {
        std::cerr << "decay check failed: " << e.what() << "\n";
        return 2;
    } catch (const cdx::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
}

/* ------------------------------ selftest --------------------------------- */

struct Suite {
    std::string name;
    int passed = 0;
    int failed = 0;

    void check(bool ok, const std::string& what) {
        if (ok) {
            ++passed;
        } else {
            ++failed;
            std::cerr << "  FAIL [" << name << "] " << what << "\n";
        }
    }
};

cdx::CDNumber random_cd(int level, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    cdx::CDNumber a(level);
    for (int j = 0; j < a.dim(); ++j) a[j] = u(rng);
    return a;
}

void algebra_suite(Suite& s) {
    std::mt19937_64 rng(20260815u);
    for (int level = 1; level <= 4; ++level) {
        double table_gap = 0.0, conj_gap = 0.0, norm_gap = 0.0, alt_gap = 0.0, pow_gap = 0.0;
        for (int it = 0; it < 200; ++it) {
            const cdx::CDNumber a = random_cd(level, rng);
            const cdx::CDNumber b = random_cd(level, rng);
            table_gap = std::max(
                table_gap, cdx::cd_norm(cdx::cd_sub(cdx::cd_mul(a, b), cdx::cd_mul_table(a, b))));
            conj_gap = std::max(
                conj_gap, cdx::cd_norm(cdx::cd_sub(cdx::cd_conj(cdx::cd_mul(a, b)),
                                                   cdx::cd_mul(cdx::cd_conj(b), cdx::cd_conj(a)))));
            if (level <= 3) {
                norm_gap = std::max(norm_gap, std::fabs(cdx::cd_norm2(cdx::cd_mul(a, b)) -
                                                        cdx::cd_norm2(a) * cdx::cd_norm2(b)));
                alt_gap = std::max(alt_gap, cdx::cd_norm(cdx::cd_associator(a, a, b)));
            }
            pow_gap = std::max(
                pow_gap, cdx::cd_norm(cdx::cd_sub(cdx::cd_mul(cdx::cd_mul(a, a), a),
                                                  cdx::cd_mul(a, cdx::cd_mul(a, a)))));
        }
        s.check(table_gap == 0.0, "doubling vs table not bit-equal at level " +
                                      std::to_string(level));
        s.check(conj_gap <= 1e-12, "conjugation anti-automorphism at level " +
                                       std::to_string(level));
        s.check(pow_gap <= 1e-12, "power associativity at level " + std::to_string(level));
        if (level <= 3) {
            s.check(norm_gap <= 1e-12, "norm multiplicativity at level " + std::to_string(level));
            s.check(alt_gap <= 1e-12, "alternativity at level " + std::to_string(level));
        }
    }

    /* level 4 breaks alternativity; a fixed witness keeps the check cheap */
    {
        std::mt19937_64 wrng(3u);
        double worst = 0.0;
        for (int it = 0; it < 50; ++it) {
            const cdx::CDNumber a = random_cd(4, wrng);
            const cdx::CDNumber b = random_cd(4, wrng);
            worst = std::max(worst, cdx::cd_norm(cdx::cd_associator(a, a, b)));
        }
        s.check(worst > 1e-3, "level 4 should break alternativity");
    }

    const auto zd = cdx::find_zero_divisor(4);
    s.check(zd.has_value(), "level 4 zero divisor search");
    if (zd) {
        std::cerr << "  zero divisors at level 4: a = " << cdx::to_string(zd->a)
                  << ", b = " << cdx::to_string(zd->b)
                  << ", |ab| = " << cdx::cd_norm(cdx::cd_mul(zd->a, zd->b)) << "\n";
        s.check(cdx::cd_norm(zd->a) > 0.5 && cdx::cd_norm(zd->b) > 0.5 &&
                    cdx::cd_norm(cdx::cd_mul(zd->a, zd->b)) < 1e-12,
                "zero divisor pair quality");
    }
    s.check(!cdx::find_zero_divisor(3).has_value(), "no zero divisors at level 3");
}

void operator_suite(Suite& s) {
    for (int level = 2; level <= 3; ++level) {
        const cdx::AlgebraCheckReport rep = cdx::dr_algebra_check(level, 11u);
        s.check(rep.signed_rule_err <= 1e-10,
                "composition rule at level " + std::to_string(level));
        s.check(rep.unsigned_rule_err > 1e-6,
                "naive composition rule should disagree at level " + std::to_string(level));
        s.check(rep.power_assoc_err <= 1e-10,
                "operator power associativity at level " + std::to_string(level));
        s.check(rep.even_power_leak <= 1e-10,
                "even power real-coefficient leak at level " + std::to_string(level));
        s.check(rep.center_commute_err <= 1e-10, "center at level " + std::to_string(level));
    }

    /* even sigma powers of a real field stay real */
    const cdx::SigmaSpec sg = cdx::SigmaSpec::single(2, 1, 1.0, 0);
    const cdx::GridFunction f =
        cdx::gf_sample(2, 1, {cdx::Axis{0, 1, 101, 0.03, -1.5}},
                       [](const std::vector<double>& x) {
                           cdx::CDMatrix m(2, 1);
                           m.at(0, 0, 0) = std::exp(-x[0] * x[0]);
                           return m;
                       });
    const cdx::RealCoeffReport rc = cdx::check_real_coefficients(f, sg, 1);
    s.check(rc.leak <= 1e-12, "sigma^2 imaginary leak on a real field");
    s.check(rc.closed_form_diff <= 1e-12, "sigma^2 vs closed second-derivative form");
}

void line_integral_suite(Suite& s) {
    /* quadrature sanity: int_0^pi sin = 2 */
    {
        const int n = 101;
        const double h = M_PI / (n - 1);
        const std::vector<double> w = cdx::quad_weights(cdx::QuadRule::Simpson, n, h);
        double acc = 0.0;
        for (int k = 0; k < n; ++k) acc += w[static_cast<size_t>(k)] * std::sin(k * h);
        s.check(std::fabs(acc - 2.0) <= 1e-7, "simpson weights on sin over [0, pi]");
    }

    /* sigma (antideriv from base) = id and sigma (antideriv to infinity) = -id */
    const cdx::SigmaSpec sg = cdx::SigmaSpec::single(2, 1, 1.0, 0);
    std::vector<double> v0(2, 0.0);
    v0[1] = 1.0;
    const int n = 301;
    const double h = 0.025;
    const cdx::GridFunction g =
        cdx::gf_sample(2, 1, {cdx::Axis{0, 1, n, h, 0.0}}, [](const std::vector<double>& x) {
            cdx::CDMatrix m(2, 1);
            m.at(0, 0, 0) = std::exp(-3.0 * x[0]);
            m.at(0, 0, 1) = 0.5 * std::exp(-3.0 * x[0]);
            return m;
        });
    const cdx::GridFunction wf = cdx::antideriv_from_base(g, 0, sg, v0);
    const double gap_from =
        cdx::gf_norm_inf(cdx::gf_sub(cdx::apply_sigma(wf, sg), g), {2}) / cdx::gf_norm_inf(g);
    s.check(gap_from <= 2e-3, "sigma of antideriv_from_base = identity");

    const cdx::GridFunction wt = cdx::antideriv_to_infinity(g, 0, sg, v0);
    const double gap_to =
        cdx::gf_norm_inf(cdx::gf_add(cdx::apply_sigma(wt, sg), g), {2}) / cdx::gf_norm_inf(g);
    s.check(gap_to <= 2e-3, "sigma of antideriv_to_infinity = -identity");

    const auto decay = cdx::operator_norm_decay(n, h, {1.0, 2.0, 4.0, 8.0});
    bool monotone = decay.size() == 4;
    for (size_t k = 1; k < decay.size(); ++k)
        monotone = monotone && decay[k].second < decay[k - 1].second;
    s.check(monotone, "half-line integral norms decay with the frequency");
}

int cmd_selftest(bool force_failure) {
    std::vector<Suite> suites{{"algebra"}, {"operator"}, {"line_integral"}};
    algebra_suite(suites[0]);
    operator_suite(suites[1]);
    line_integral_suite(suites[2]);
    if (force_failure) suites.back().check(false, "forced failure requested");

    int failed = 0;
    for (const auto& s : suites) {
        std::cout << s.name << ": " << s.passed << "/" << (s.passed + s.failed)
                  << " checks passed\n";
        failed += s.failed;
    }
    return failed == 0 ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cayley-Dickson dressing solver"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    CLI::App* run = app.add_subcommand("run", "solve a scenario config and write reports");
    run->add_option("config", config_path, "JSON config path")->required();
    run->add_option("--out-dir", out_dir, "directory for report files (default .)");

    bool force_failure = false;
    CLI::App* selftest = app.add_subcommand("selftest", "run the invariant suites");
    selftest->add_flag("--force-failure", force_failure, "fail one check (CI plumbing test)");

    int table_level = 0;
    CLI::App* table = app.add_subcommand("table", "print a basis multiplication table");
    table->add_option("r", table_level, "doubling level")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(config_path, out_dir);
        if (selftest->parsed()) return cmd_selftest(force_failure);
        if (table->parsed()) {
            std::cout << cdx::table_to_string(table_level);
            return 0;
        }
    } catch (const cdx::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 0;
}

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "entform/scenario.hpp"
#include "entform/workbench.hpp"

namespace {

using entform::Report;
using entform::Scenario;

std::vector<std::string> split_list(const std::string& csv) {
    std::vector<std::string> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

int emit_report(const Report& rep, const std::string& out_dir, const std::string& stem) {
    const auto j = rep.to_json();
    if (out_dir.empty()) {
        std::cout << j.dump(2) << "\n";
    } else {
        std::filesystem::create_directories(out_dir);
        std::ofstream jf(out_dir + "/" + stem + ".json");
        jf << j.dump(2) << "\n";
        std::ofstream cf(out_dir + "/" + stem + ".csv");
        cf << rep.to_csv();
        std::cout << "report written to " << out_dir << "/" << stem << ".json\n";
    }
    if (!rep.all_certificates_pass()) {
        nlohmann::json failures = nlohmann::json::array();
        for (const auto& suite : rep.suites) {
            for (const auto& cert : suite.certificates) {
                if (!cert.pass) {
                    failures.push_back(
                        {{"suite", suite.name}, {"certificate", cert.name}, {"witness", cert.witness}});
                }
            }
        }
        std::cerr << nlohmann::json{{"error", "certificate failures"}, {"failures", failures}}.dump() << "\n";
        return 1;
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exact dyadic workbench for entangled multilinear forms"};
    app.require_subcommand(1);

    std::string scenario_path;
    std::string out_dir;
    std::string suites_csv;
    std::string engine = "both";
    std::string width_str;
    uint64_t seed = 0;
    bool seed_set = false;

    auto* run = app.add_subcommand("run", "run scenario suites and write a report");
    run->add_option("--scenario", scenario_path, "scenario JSON path")->required();
    run->add_option("--suite", suites_csv, "comma-separated suite list (default: scenario's)");
    run->add_option("--seed", seed, "override the scenario seed")->each([&](const std::string&) { seed_set = true; });
    run->add_option("--width", width_str, "enclosure width as a rational");
    run->add_option("--out", out_dir, "output directory for report JSON/CSV");
    run->add_option("--engine", engine, "naive|factorized|both")
        ->check(CLI::IsMember({"naive", "factorized", "both"}));

    auto* validate_cmd = app.add_subcommand("validate", "schema, hypergraph, and kernel validation");
    validate_cmd->add_option("--scenario", scenario_path, "scenario JSON path")->required();
    validate_cmd->add_option("--out", out_dir, "output directory");

    entform::GenerateOptions gen;
    std::string sizes_csv;
    std::string gen_out;
    std::string coeff_cap_str;
    auto* generate = app.add_subcommand("generate", "emit a reproducible scenario");
    generate->add_option("--profile", gen.profile,
                         "random-kernel-via-coefficients|random-tuple|spike|constant");
    generate->add_option("--seed", gen.seed, "generation seed");
    generate->add_option("--r", gen.r, "dimension");
    generate->add_option("--L", gen.L, "top scale exponent");
    generate->add_option("--N", gen.N, "finest scale exponent");
    generate->add_option("--sizes", sizes_csv, "class sizes, e.g. 2,2");
    generate->add_option("--suites", suites_csv, "suites to embed");
    generate->add_option("--coeff-cap", coeff_cap_str, "cap on |lambda| for random kernels");
    generate->add_option("--out", gen_out, "output file (stdout when omitted)");

    long bench_axis = 16;
    auto* bench = app.add_subcommand("bench", "naive vs factorized engine timing");
    bench->add_option("--scenario", scenario_path, "scenario JSON path (default: built-in instance)");
    bench->add_option("--per-axis", bench_axis, "per-axis cell count of the built-in instance");
    bench->add_option("--out", out_dir, "output directory");

    CLI11_PARSE(app, argc, argv);

    try {
        if (generate->parsed()) {
            if (!sizes_csv.empty()) {
                gen.class_sizes.clear();
                for (const auto& tok : split_list(sizes_csv)) gen.class_sizes.push_back(std::stoi(tok));
            }
            if (!suites_csv.empty()) gen.suites = split_list(suites_csv);
            if (!coeff_cap_str.empty()) {
                const auto cap = entform::parse_rational(coeff_cap_str);
                if (!cap) throw std::invalid_argument("--coeff-cap: not a rational");
                gen.coeff_cap = *cap;
            }
            const auto j = entform::generate_scenario(gen);
            if (gen_out.empty()) {
                std::cout << j.dump(2) << "\n";
            } else {
                std::ofstream out(gen_out);
                out << j.dump(2) << "\n";
                std::cout << "scenario written to " << gen_out << "\n";
            }
            return 0;
        }
        if (validate_cmd->parsed()) {
            Scenario sc = entform::load_scenario(scenario_path);
            Report rep = entform::run_scenario(sc, {"validate"});
            rep.scenario_name = scenario_path;
            return emit_report(rep, out_dir, "validate");
        }
        if (run->parsed()) {
            Scenario sc = entform::load_scenario(scenario_path);
            if (seed_set) sc.seed = seed;
            if (!width_str.empty()) {
                const auto w = entform::parse_rational(width_str);
                if (!w || !(*w > 0)) throw std::invalid_argument("--width: expected a positive rational");
                sc.width = *w;
            }
            Report rep = entform::run_scenario(sc, split_list(suites_csv), engine);
            rep.scenario_name = scenario_path;
            return emit_report(rep, out_dir, "report");
        }
        if (bench->parsed()) {
            Scenario sc;
            if (!scenario_path.empty()) {
                sc = entform::load_scenario(scenario_path);
            } else {
                // built-in instance: twisted kernel on a complete (2,2) graph
                int ln = 0;
                while ((1L << (ln + 1)) < bench_axis) ++ln;
                entform::GenerateOptions opt;
                opt.profile = "random-tuple";
                opt.seed = 7;
                opt.r = 2;
                opt.L = 0;
                opt.N = ln;
                opt.suites = {"bench"};
                sc = entform::parse_scenario(entform::generate_scenario(opt));
            }
            Report rep = entform::run_scenario(sc, {"bench"});
            rep.scenario_name = scenario_path.empty() ? "builtin-bench" : scenario_path;
            return emit_report(rep, out_dir, "bench");
        }
    } catch (const std::invalid_argument& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << nlohmann::json{{"error", e.what()}}.dump() << "\n";
        return 2;
    }
    return 0;
}

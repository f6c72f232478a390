#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mhs/dsl/parser.hpp"
#include "mhs/dsl/printer.hpp"
#include "mhs/dsl/runner.hpp"
#include "mhs_fixtures.hpp"

namespace {

using nlohmann::ordered_json;

constexpr int exit_usage = 2;

// A path on disk, or the name of a bundled fixture.
std::optional<std::string> load(const std::string& where)
{
    if (std::filesystem::is_regular_file(where)) {
        std::ifstream in(where, std::ios::binary);
        std::ostringstream text;
        text << in.rdbuf();
        return text.str();
    }
    std::string stem = std::filesystem::path(where).filename().string();
    if (stem.size() > 4 && stem.ends_with(".mhs"))
        stem.resize(stem.size() - 4);
    for (const auto& [name, text] : mhs::fixtures::bundled)
        if (name == stem)
            return std::string(text);
    return std::nullopt;
}

void print_diagnostics(const std::string& file, const std::vector<mhs::dsl::Diagnostic>& diags, bool json)
{
    for (const auto& d : diags) {
        std::cerr << file << ":" << d.str() << "\n";
        if (json) {
            ordered_json rec;
            rec["command"] = "parse";
            rec["status"] = "error";
            rec["witness"] = file + ":" + d.str();
            std::cout << rec.dump() << "\n";
        }
    }
}

ordered_json to_json(const mhs::dsl::Record& r)
{
    ordered_json rec;
    rec["command"] = r.command;
    rec["status"] = r.status;
    if (!r.values.empty() || !r.checks.empty()) {
        ordered_json values = ordered_json::object();
        for (const auto& [k, v] : r.values)
            values[k] = v;
        if (!r.checks.empty()) {
            ordered_json checks = ordered_json::array();
            for (const auto& c : r.checks) {
                ordered_json check;
                check["name"] = c.name;
                check["passed"] = c.passed;
                check["samples"] = c.samples;
                if (!c.passed)
                    check["detail"] = c.detail;
                checks.push_back(std::move(check));
            }
            values["checks"] = std::move(checks);
        }
        rec["values"] = std::move(values);
    }
    if (r.witness)
        rec["witness"] = *r.witness;
    return rec;
}

void print_human(const mhs::dsl::Record& r)
{
    std::cout << (r.passed() ? "PASS " : "FAIL ") << r.command << "\n";
    for (const auto& [k, v] : r.values)
        std::cout << "     " << k << ": " << v << "\n";
    for (const auto& c : r.checks)
        if (!c.passed)
            std::cout << "     check " << c.name << " failed after " << c.samples << " samples\n";
    if (r.witness)
        std::cout << "     witness: " << *r.witness << "\n";
}

int run_command(const std::string& file, bool json, std::optional<std::uint64_t> seed, std::optional<int> trials)
{
    const auto text = load(file);
    if (!text) {
        std::cerr << file << ": no such file or bundled fixture\n";
        return exit_usage;
    }
    const auto parsed = mhs::dsl::parse(*text);
    if (!parsed.ok()) {
        print_diagnostics(file, parsed.diagnostics, json);
        return exit_usage;
    }
    const auto result = mhs::dsl::run(parsed.script, {trials, seed});
    std::size_t failed = 0;
    for (const auto& r : result.records) {
        failed += r.passed() ? 0 : 1;
        if (json)
            std::cout << to_json(r).dump() << "\n";
        else
            print_human(r);
    }
    print_diagnostics(file, result.diagnostics, json);
    if (!json)
        std::cout << result.records.size() << " command(s), " << failed << " failed\n";
    return result.exit_code;
}

int check_command(const std::string& file, bool print)
{
    const auto text = load(file);
    if (!text) {
        std::cerr << file << ": no such file or bundled fixture\n";
        return exit_usage;
    }
    const auto parsed = mhs::dsl::parse(*text);
    print_diagnostics(file, parsed.diagnostics, false);
    if (!parsed.ok())
        return exit_usage;
    if (print)
        std::cout << mhs::dsl::print(parsed.script);
    else
        std::cout << file << ": ok, " << parsed.script.items.size() << " statement(s)\n";
    return 0;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"mhs: n-trivial extensions, multi Hasse-Schmidt derivations and jet quotients"};
    app.require_subcommand(1);

    std::string file;
    bool json = false;
    std::optional<std::uint64_t> seed;
    std::optional<int> trials;
    auto* run = app.add_subcommand("run", "run a script (exit 0: all pass, 1: a check failed, 2: script error)");
    run->add_option("file", file, "script path or bundled fixture name")->required();
    run->add_flag("--json", json, "one JSON record per command");
    run->add_option("--seed", seed, "default seed for sampled checks");
    run->add_option("--trials", trials, "default trial count for sampled checks")->check(CLI::Range(1, 100000));

    bool print = false;
    auto* check = app.add_subcommand("check", "parse a script and report diagnostics");
    check->add_option("file", file, "script path or bundled fixture name")->required();
    check->add_flag("--print", print, "print the canonical form of the script");

    std::string show;
    auto* examples = app.add_subcommand("examples", "list bundled fixture scripts");
    examples->add_option("--show", show, "print the named fixture");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : exit_usage;
    }

    if (*run)
        return run_command(file, json, seed, trials);
    if (*check)
        return check_command(file, print);
    if (!show.empty()) {
        for (const auto& [name, text] : mhs::fixtures::bundled)
            if (name == show) {
                std::cout << text;
                return 0;
            }
        std::cerr << show << ": no bundled fixture of that name\n";
        return exit_usage;
    }
    for (const auto& [name, text] : mhs::fixtures::bundled) {
        const auto first = text.find('\n');
        std::string summary(text.substr(0, first));
        if (summary.rfind("# ", 0) == 0)
            summary = summary.substr(2);
        std::cout << name << "  " << summary << "\n";
    }
    return 0;
}

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mhs {

enum class ErrorCode {
    unknown_variable,
    algebra_mismatch,
    level_out_of_range,
    system_mismatch,
    unvalidated_system,
    dagger_violation,
    chain_incompatible,
    not_starred,
    square_violation,
    lambda_not_one,
    not_a_derivation,
    invalid_argument,
};

inline std::string_view error_code_name(ErrorCode code) noexcept
{
    switch (code) {
    case ErrorCode::unknown_variable: return "UnknownVariable";
    case ErrorCode::algebra_mismatch: return "AlgebraMismatch";
    case ErrorCode::level_out_of_range: return "LevelOutOfRange";
    case ErrorCode::system_mismatch: return "SystemMismatch";
    case ErrorCode::unvalidated_system: return "UnvalidatedSystem";
    case ErrorCode::dagger_violation: return "DaggerViolation";
    case ErrorCode::chain_incompatible: return "ChainIncompatible";
    case ErrorCode::not_starred: return "NotStarred";
    case ErrorCode::square_violation: return "SquareViolation";
    case ErrorCode::lambda_not_one: return "LambdaNotOne";
    case ErrorCode::not_a_derivation: return "NotADerivation";
    case ErrorCode::invalid_argument: return "InvalidArgument";
    }
    return "Error";
}

/// Exception carrying a machine-readable code and, where one exists, a
/// counterexample that reproduces the failure.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message, std::string witness = {})
        : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
          code_(code), witness_(std::move(witness))
    {
    }

    ErrorCode code() const noexcept { return code_; }
    const std::string& witness() const noexcept { return witness_; }

private:
    ErrorCode code_;
    std::string witness_;
};

/// One named condition of a verification run.
struct CheckResult {
    std::string name;
    bool passed = true;
    std::size_t samples = 0;
    // Counterexample on failure, informational text (certificates) on success.
    std::string detail;
};

/// Outcome of a sampling or exhaustive verification. A failed entry always
/// carries a witness in `detail`.
struct ValidationReport {
    std::vector<CheckResult> checks;

    bool ok() const noexcept
    {
        for (const auto& c : checks)
            if (!c.passed)
                return false;
        return true;
    }

    const CheckResult* first_failure() const noexcept
    {
        for (const auto& c : checks)
            if (!c.passed)
                return &c;
        return nullptr;
    }

    const CheckResult* find(std::string_view name) const noexcept
    {
        for (const auto& c : checks)
            if (c.name == name)
                return &c;
        return nullptr;
    }

    void pass(std::string name, std::size_t samples, std::string detail = {})
    {
        checks.push_back({std::move(name), true, samples, std::move(detail)});
    }

    void fail(std::string name, std::size_t samples, std::string witness)
    {
        checks.push_back({std::move(name), false, samples, std::move(witness)});
    }

    void merge(const ValidationReport& other, std::string_view prefix = {})
    {
        for (auto c : other.checks) {
            if (!prefix.empty())
                c.name = std::string(prefix) + "." + c.name;
            checks.push_back(std::move(c));
        }
    }
};

} // namespace mhs

#pragma once

#include <stdexcept>
#include <string>

namespace gmoi {

// Input or invariant violations. The CLI maps these to exit code 2.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class SingularMatrix : public ValidationError {
public:
    SingularMatrix(const std::string& what, double condition)
        : ValidationError(what), condition_(condition) {}
    double condition() const { return condition_; }

private:
    double condition_;
};

class AmbiguousClustering : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class StructureInstability : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class UnsupportedOrder : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class PoleError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

// Term-count guardrail. The CLI maps this to exit code 3.
class BudgetExceeded : public std::runtime_error {
public:
    BudgetExceeded(std::size_t needed, std::size_t budget)
        : std::runtime_error("term budget exceeded: " + std::to_string(needed) + " > " +
                             std::to_string(budget)),
          needed_(needed), budget_(budget) {}
    std::size_t needed() const { return needed_; }
    std::size_t budget() const { return budget_; }

private:
    std::size_t needed_;
    std::size_t budget_;
};

} // namespace gmoi

#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace fracwave::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kUsage = 2, kNumericalAbort = 3 };

struct Check {
    std::string name;
    double measured;
    double tolerance;
    bool pass;
    std::string note;
};

struct VerifyReport {
    std::string suite;
    std::vector<Check> checks;
    bool pass() const;
};

struct VerifyOptions {
    int n = 2;
    double gamma = 0.5;
    double theta = 0.0;
    double p = 3.0;
    double eta = 1.5;
    int refine = 3;
};

/// Suites: frac-time, frac-space, weakform, scaling. Throws DomainError on an unknown name.
VerifyReport run_suite(const std::string& suite, const VerifyOptions& opt);
std::string verify_json(const VerifyReport& r);
void print_verify_table(const VerifyReport& r, std::ostream& os);

/// Flat "key = value" text; '#' starts a comment. Throws DomainError on malformed lines.
std::map<std::string, std::string> parse_config(std::istream& is);

/// Entry point of the fracwave binary.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace fracwave::cli

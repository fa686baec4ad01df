// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.
// Exit status is 1 when a gated criterion fails.
#include <cstdio>

#include "couette/verify.hpp"

int main() {
    using namespace couette::verify;
    Context ctx;
    bool ok = true;
    for (const auto& [id, fn] : all_criteria()) {
        const Criterion c = run_criterion(id, ctx);
        std::string vals;
        for (const auto& m : c.values) {
            char b[64];
            std::snprintf(b, sizeof b, " %s=%.6g", m.name.c_str(), m.value);
            vals += b;
        }
        const char* tag = c.pass ? "PASS" : (c.gated ? "FAIL" : "FAIL (exploratory, not gated)");
        std::printf("AC%-2d %s  %s |%s  (%.1fs)\n", c.id, tag, c.title.c_str(), vals.c_str(), c.seconds);
        for (const auto& row : c.table) {
            std::printf("      ");
            for (double v : row) std::printf(" %-12.5g", v);
            std::printf("\n");
        }
        if (!c.table.empty()) std::printf("      columns: %s\n", c.table_header.c_str());
        std::fflush(stdout);
        if (c.gated && !c.pass) ok = false;
    }
    return ok ? 0 : 1;
}

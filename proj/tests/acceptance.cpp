// Acceptance suite: one pass/fail line per criterion. Filled in alongside the
// experiment tuning below.
#include <cstdio>

int main() {
    std::puts("acceptance suite placeholder");
    return 0;
}

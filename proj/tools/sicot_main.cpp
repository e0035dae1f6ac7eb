#include <cstdio>

int main() {
    std::puts("sicot: placeholder");
    return 0;
}

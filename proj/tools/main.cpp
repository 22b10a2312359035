#include <cstdio>

int main() {
    std::puts("kpls: CLI not wired yet");
    return 0;
}

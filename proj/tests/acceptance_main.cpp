#include <cstdio>
int main(int, char**) { std::printf("acceptance suite pending\n"); return 1; }

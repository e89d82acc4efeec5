#include <cstdio>
int main(){ puts("wordprob"); return 0; }

/* hand corpus: logical short */
#include <stdio.h>
static int calls;
static int touch(int v) { calls++; return v; }

int main(void)
{
    int r = touch(0) && touch(1);
    r += touch(1) || touch(0);
    printf("r=%d calls=%d\n", r, calls);
    return 0;
}

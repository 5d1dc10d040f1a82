/* hand corpus: struct pass */
#include <stdio.h>
struct point { int x, y; };

static struct point add(struct point a, struct point b)
{
    struct point r;
    r.x = a.x + b.x;
    r.y = a.y + b.y;
    return r;
}

int main(void)
{
    struct point p = {1, 2}, q = {30, 40};
    struct point r = add(p, q);
    printf("(%d, %d)\n", r.x, r.y);
    return 0;
}

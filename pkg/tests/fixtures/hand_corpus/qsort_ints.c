/* hand corpus: qsort ints */
#include <stdio.h>
#include <stdlib.h>

static int cmp(const void *a, const void *b)
{
    int x = *(const int *)a, y = *(const int *)b;
    return (x > y) - (x < y);
}

int main(void)
{
    int v[] = {42, -7, 0, 19, 3, 3, -100};
    int i;
    qsort(v, 7, sizeof v[0], cmp);
    for (i = 0; i < 7; i++)
        printf("%d ", v[i]);
    printf("\n");
    return 0;
}

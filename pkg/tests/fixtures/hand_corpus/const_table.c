/* hand corpus: const table */
#include <stdio.h>
static const int squares[] = {0, 1, 4, 9, 16, 25};

int main(void)
{
    int i, s = 0;
    for (i = 0; i < (int)(sizeof squares / sizeof squares[0]); i++)
        s += squares[i];
    printf("%d\n", s);
    return 0;
}

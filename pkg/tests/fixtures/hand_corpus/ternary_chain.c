/* hand corpus: ternary chain */
#include <stdio.h>
int main(void)
{
    int x;
    for (x = -2; x <= 2; x++)
        printf("%s\n", x < 0 ? "neg" : x == 0 ? "zero" : "pos");
    return 0;
}

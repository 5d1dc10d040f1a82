/* hand corpus: comma op */
#include <stdio.h>
int main(void)
{
    int a, b;
    a = (b = 3, b + 4);
    printf("%d %d\n", a, b);
    return 0;
}

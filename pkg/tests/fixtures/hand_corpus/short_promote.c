/* hand corpus: short promote */
#include <stdio.h>
int main(void)
{
    short a = 30000, b = 30000;
    int c = a + b;
    printf("%d\n", c);
    return 0;
}

/* hand corpus: float sum */
#include <stdio.h>
int main(void)
{
    double s = 0.0;
    int i;
    for (i = 1; i <= 10; i++)
        s += 1.0 / i;
    printf("%.6f\n", s);
    return 0;
}

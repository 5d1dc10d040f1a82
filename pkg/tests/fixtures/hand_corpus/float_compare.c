/* hand corpus: float compare */
#include <stdio.h>
int main(void)
{
    float a = 0.5f, b = 0.25f;
    printf("%d %d %d\n", a > b, a + b == 0.75f, (double)a * 2 == 1.0);
    return 0;
}

/* hand corpus: gcd */
#include <stdio.h>
static int gcd(int a, int b) { while (b) { int t = a % b; a = b; b = t; } return a; }

int main(void)
{
    printf("%d %d %d\n", gcd(48, 18), gcd(17, 5), gcd(1071, 462));
    return 0;
}

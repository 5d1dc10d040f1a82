/* hand corpus: fib */
#include <stdio.h>
int main(void)
{
    long a = 0, b = 1;
    int i;
    for (i = 0; i < 40; i++) {
        long t = a + b;
        printf("%ld\n", a);
        a = b;
        b = t;
    }
    return 0;
}

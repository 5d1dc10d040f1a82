/* hand corpus: shift unsigned */
#include <stdio.h>
int main(void)
{
    unsigned int x = 1u;
    int i;
    for (i = 0; i < 32; i += 7)
        printf("%u\n", x << i);
    printf("%u\n", 0x80000000u >> 31);
    return 0;
}

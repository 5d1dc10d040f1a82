/* hand corpus: unsigned wrap */
#include <stdio.h>
int main(void)
{
    unsigned int u = 0u;
    u -= 1u;
    printf("%u\n", u);
    printf("%u\n", u + 2u);
    return 0;
}

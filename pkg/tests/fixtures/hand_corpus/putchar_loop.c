/* hand corpus: putchar loop */
#include <stdio.h>
int main(void)
{
    int c;
    for (c = '0'; c <= '9'; c++)
        putchar(c);
    putchar('\n');
    return 0;
}

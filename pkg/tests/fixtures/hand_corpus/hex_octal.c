/* hand corpus: hex octal */
#include <stdio.h>
int main(void)
{
    printf("%x %X %o %#x\n", 255, 255, 8, 16);
    return 0;
}

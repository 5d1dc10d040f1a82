/* hand corpus: sprintf fmt */
#include <stdio.h>
int main(void)
{
    char buf[64];
    sprintf(buf, "[%5d|%-5d|%05d]", 42, 42, 42);
    puts(buf);
    return 0;
}

/* hand corpus: long long mul */
#include <stdio.h>
int main(void)
{
    long long a = 3037000499LL;
    printf("%lld\n", a * a);
    return 0;
}

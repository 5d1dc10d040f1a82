/* hand corpus: union bits */
#include <stdio.h>
#include <stdint.h>

int main(void)
{
    union { uint32_t u; unsigned char b[4]; } v;
    v.u = 0;
    v.b[0] = 0x78;
    printf("%u\n", (unsigned)(v.u & 0xffu));
    return 0;
}

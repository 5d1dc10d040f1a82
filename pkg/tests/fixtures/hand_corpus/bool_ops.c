/* hand corpus: bool ops */
#include <stdio.h>
#include <stdbool.h>

int main(void)
{
    bool t = true, f = false;
    printf("%d %d %d %d\n", t && f, t || f, !t, t < 'a');
    return 0;
}

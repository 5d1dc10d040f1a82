/* rejected by any C compiler: unbalanced braces */
int main(void)
{
    return 0;

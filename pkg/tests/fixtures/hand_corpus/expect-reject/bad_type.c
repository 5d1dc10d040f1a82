/* rejected by any C compiler: struct used as a scalar */
struct s { int a; };

int main(void)
{
    struct s v = {1};
    return v + 1;
}

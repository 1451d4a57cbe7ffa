int * func_1(int a[])
{
    int p_0 = 3;
    int l_2 = 2;
    a[l_2] = a[p_0];
    --a[l_2];
    return a;
}

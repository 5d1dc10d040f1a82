/* mini corpus file f02 */
int f02_value = 2;

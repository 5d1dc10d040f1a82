/* mini corpus file f15 */
int f15_value = 15;

/* mini corpus file f09 */
int f09_value = 9;
